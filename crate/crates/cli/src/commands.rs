//! Subcommand implementations. Each writes its machine-readable result to
//! `--out` and a short human summary to standard output.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clipsmith_core::metrics::{batch_csv, batch_table, build_report, MetricsConfig, MetricsReport};
use clipsmith_core::select::{
    build_prompt, heuristic_select, request_selection, sanitize_cutlist, select_visual, ChatRequest,
    HeuristicConfig, ParseMode, RetryPolicy, SelectError,
};
use clipsmith_core::subtitles::{generate_subtitles, segment_map};
use clipsmith_core::transcribe::{sha256_file, transcribe_dual, FragmentConfig, TranscribeError};
use clipsmith_core::transcript::{detect_pauses, DEFAULT_PAUSE_MIN_GAP};
use clipsmith_core::{
    validate_cutlist, AudioArtifact, AudioFormat, CutList, Extractor, Transcript, ValidatedCutList, VideoMeta,
};
use clipsmith_media::cutmerge::describe_segment_map;
use clipsmith_media::{
    burn_subtitles, extract_audio, merge, probe, probe_video, reframe, ClipArtifact, MediaError, MergeConfig,
};
use clipsmith_service::{
    ArtifactKind, Backends, Clock, FixedClock, FsJobStore, IdStrategy, JobSource, JobStore, Pipeline,
    SelectorKind, ServiceError, SystemClock,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::cli::{Command, MergeArgs, PersonaArgs, SelectorArgs};
use crate::config::Settings;
use crate::error::{CliError, CliResult};

fn read_doc<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::pipeline(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::pipeline(format!("{}: {e}", path.display())))
}

fn write_doc<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut body = serde_json::to_vec_pretty(value).map_err(CliError::pipeline)?;
    body.push(b'\n');
    write_bytes(path, &body)
}

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Input(format!("{} is not a readable file", path.display())))
    }
}

fn media(e: MediaError) -> CliError {
    match e {
        MediaError::UnsupportedFormat { .. } => CliError::Input(e.to_string()),
        other => CliError::pipeline(other),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn parent_dir(path: &Path) -> &Path {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn place(from: &Path, to: &Path) -> CliResult<()> {
    if let Some(dir) = to.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::pipeline(format!("{}: {e}", dir.display())))?;
    }
    fs::copy(from, to)
        .map(|_| ())
        .map_err(|e| CliError::pipeline(format!("{} -> {}: {e}", from.display(), to.display())))
}

fn describe_meta(m: &VideoMeta) -> String {
    let audio = match (&m.audio_codec, m.sample_rate) {
        (Some(c), Some(r)) => format!("audio {c} {r} Hz"),
        (Some(c), None) => format!("audio {c}"),
        _ if m.has_audio => "audio".to_string(),
        _ => "no audio".to_string(),
    };
    format!(
        "{}: {}, {} s, {}x{} @ {:.2} fps, {}",
        m.path.display(),
        m.container,
        m.duration,
        m.width,
        m.height,
        m.fps,
        audio
    )
}

fn describe_cutlist(c: &CutList) -> String {
    let mut s = String::new();
    for (i, seg) in c.playback().enumerate() {
        s.push_str(&format!("{:>3}  {}  {}\n", i + 1, seg.range, seg.text));
    }
    s.push_str(&format!("{} segment(s), {} s total\n", c.len(), c.total_duration));
    s
}

fn print_report(r: &MetricsReport) {
    print!("{}", batch_table(std::slice::from_ref(r), r.tau));
}

pub fn run(settings: &Settings, command: Command) -> CliResult<()> {
    match command {
        Command::Probe { video, out } => cmd_probe(settings, &video, out.as_deref()),
        Command::ExtractAudio { video, out, format } => cmd_extract(settings, &video, &out, format),
        Command::Transcribe { audio, out, fast_out } => cmd_transcribe(settings, &audio, &out, fast_out.as_deref()),
        Command::Select {
            transcript,
            out,
            video,
            audit,
            selector,
            persona,
        } => cmd_select(settings, &transcript, &out, video.as_deref(), audit.as_deref(), &selector, &persona),
        Command::Merge {
            video,
            cutlist,
            out,
            workdir,
            transcript,
            merge,
        } => cmd_merge(settings, &video, &cutlist, &out, workdir.as_deref(), transcript.as_deref(), &merge),
        Command::Subs { transcript, cutlist, out } => cmd_subs(&transcript, &cutlist, &out),
        Command::Reframe { clip, out, merge } => cmd_reframe(settings, &clip, &out, &merge),
        Command::Eval { files, tau, out, csv } => cmd_eval(settings, &files, tau, out.as_deref(), csv.as_deref()),
        Command::E2e {
            video,
            out,
            selector,
            persona,
            merge,
            tau,
        } => cmd_e2e(settings, &video, &out, &selector, &persona, &merge, tau),
        Command::Serve {
            listen,
            workdir,
            selector,
        } => cmd_serve(settings, listen, workdir, &selector),
    }
}

fn retry(settings: &Settings) -> RetryPolicy {
    settings
        .pipeline_config(SelectorKind::default(), MergeConfig::default(), 0.5)
        .retry
}

fn backends(settings: &Settings) -> CliResult<Backends> {
    Backends::from_config(&settings.backend_config()).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_probe(settings: &Settings, video: &Path, out: Option<&Path>) -> CliResult<()> {
    require_file(video)?;
    let meta = probe_video(&settings.transcoder(), video).map_err(media)?;
    if let Some(out) = out {
        write_doc(out, &meta)?;
    }
    println!("{}", describe_meta(&meta));
    Ok(())
}

fn cmd_extract(settings: &Settings, video: &Path, out: &Path, format: Option<AudioFormat>) -> CliResult<()> {
    require_file(video)?;
    let format = match format {
        Some(f) => f,
        None => out
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| AudioFormat::from_extension(e).ok_or_else(|| CliError::Usage(format!("unsupported audio extension {e:?}"))))
            .transpose()?
            .unwrap_or_default(),
    };
    let tool = settings.transcoder();
    let meta = probe_video(&tool, video).map_err(media)?;
    let art = extract_audio(&tool, &meta, format, out).map_err(media)?;
    let how = match art.extractor_used {
        Extractor::Primary => "primary",
        Extractor::Fallback => "fallback",
    };
    println!("{}: {} s {} audio via {how} extractor", out.display(), art.duration, format.extension());
    Ok(())
}

fn cmd_transcribe(settings: &Settings, audio: &Path, out: &Path, fast_out: Option<&Path>) -> CliResult<()> {
    require_file(audio)?;
    let format = audio
        .extension()
        .and_then(|e| e.to_str())
        .and_then(AudioFormat::from_extension)
        .ok_or_else(|| CliError::Input(format!("{}: unsupported audio format", audio.display())))?;
    let duration = probe(&settings.transcoder(), audio)
        .ok()
        .and_then(|i| i.duration)
        .unwrap_or_default();
    let art = AudioArtifact {
        path: audio.to_path_buf(),
        format,
        duration,
        extractor_used: Extractor::Primary,
    };
    let b = backends(settings)?;
    match transcribe_dual(&*b.fast, &*b.accurate, &art, settings.language.as_deref(), FragmentConfig::default()) {
        Ok(d) => {
            write_doc(out, &d.transcript)?;
            if let (Some(path), Some(fast)) = (fast_out, &d.fast) {
                write_doc(path, fast)?;
            }
            println!(
                "{} segment(s) ({} before merging), language {} ({:?}: {})",
                d.transcript.segments.len(),
                d.raw_accurate.segments.len(),
                d.verdict.chosen.as_deref().unwrap_or("unknown"),
                d.verdict.status,
                d.verdict.details
            );
            Ok(())
        }
        Err(TranscribeError::EmptyTranscript) => {
            write_doc(out, &Transcript::new(b.accurate.id(), duration, Vec::new()))?;
            println!("no speech detected; select with --video uses visual selection");
            Ok(())
        }
        Err(e) => Err(CliError::pipeline(e)),
    }
}

fn select_error(e: SelectError) -> CliError {
    CliError::pipeline(e)
}

fn cmd_select(
    settings: &Settings,
    transcript: &Path,
    out: &Path,
    video: Option<&Path>,
    audit: Option<&Path>,
    selector: &SelectorArgs,
    persona: &PersonaArgs,
) -> CliResult<()> {
    let t: Transcript = read_doc(transcript)?;
    let persona = settings.persona(persona)?;
    let meta = video
        .map(|v| {
            require_file(v)?;
            probe_video(&settings.transcoder(), v).map_err(media)
        })
        .transpose()?;
    let duration = meta.as_ref().map_or(t.source_duration, |m| m.duration);
    let video_id = stem(video.unwrap_or(transcript));
    let (cut, how): (ValidatedCutList, &str) = if t.is_empty() {
        let meta = meta.ok_or_else(|| CliError::Usage("transcript is empty; pass --video for visual selection".into()))?;
        let b = backends(settings)?;
        let (c, _) = select_visual(&meta, &persona, Some(&t), &*b.llm, retry(settings), audit).map_err(select_error)?;
        (c, "visual")
    } else {
        match settings.selector(selector) {
            SelectorKind::Heuristic => {
                let pauses = detect_pauses(&t, DEFAULT_PAUSE_MIN_GAP);
                let s = heuristic_select(&t, &persona, &pauses, &HeuristicConfig::default()).map_err(select_error)?;
                if !s.keywords.is_empty() {
                    println!("keywords: {}", s.keywords.join(", "));
                }
                (s.cutlist, "heuristic")
            }
            SelectorKind::Llm => {
                let b = backends(settings)?;
                let req = ChatRequest::from_bundle(&build_prompt(&t, &persona));
                let resp = request_selection(&req, &*b.llm, retry(settings), &t, duration, ParseMode::Verbatim, audit)
                    .map_err(select_error)?;
                if !resp.annotations.is_empty() {
                    println!("{} proposal(s) flagged or dropped while parsing", resp.annotations.len());
                }
                let parsed = resp
                    .parsed
                    .ok_or_else(|| select_error(SelectError::SelectionParseError { raw: resp.raw.clone() }))?;
                (sanitize_cutlist(&parsed, duration, &persona).map_err(select_error)?, "llm")
            }
        }
    };
    let cut = cut.with_ids(video_id, persona.id());
    let mut body = cut.to_json_pretty().into_bytes();
    body.push(b'\n');
    write_bytes(out, &body)?;
    print!("{how} selection\n{}", describe_cutlist(&cut));
    Ok(())
}

fn cmd_merge(
    settings: &Settings,
    video: &Path,
    cutlist: &Path,
    out: &Path,
    workdir: Option<&Path>,
    transcript: Option<&Path>,
    args: &MergeArgs,
) -> CliResult<()> {
    require_file(video)?;
    let cfg = settings.merge_config(args)?;
    let tool = settings.transcoder();
    let meta = probe_video(&tool, video).map_err(media)?;
    let c: CutList = read_doc(cutlist)?;
    let cut = validate_cutlist(c, meta.duration).map_err(|e| CliError::Input(format!("{}: {e}", cutlist.display())))?;
    let transcript: Option<Transcript> = transcript.map(read_doc).transpose()?;
    if cfg.burn_subtitles && transcript.is_none() {
        return Err(CliError::Usage("--burn-subtitles needs --transcript".into()));
    }
    let tmp;
    let workdir = match workdir {
        Some(w) => w.to_path_buf(),
        None => {
            tmp = tempfile::Builder::new()
                .prefix(".clipsmith-merge")
                .tempdir_in(parent_dir(out))
                .map_err(|e| CliError::pipeline(format!("{}: {e}", parent_dir(out).display())))?;
            tmp.path().to_path_buf()
        }
    };
    let mut clip = merge(&tool, &meta, &cut, &cfg, &workdir).map_err(media)?;
    if let (true, Some(t)) = (cfg.burn_subtitles, &transcript) {
        let srt = workdir.join("final.srt");
        write_bytes(&srt, generate_subtitles(t, &clip.segment_map).to_srt().as_bytes())?;
        clip = burn_subtitles(&tool, &clip, &srt).map_err(media)?;
    }
    clip = reframe(&tool, &clip, cfg.orientation).map_err(media)?;
    place(&clip.path, out)?;
    print!("{}", describe_segment_map(&clip.segment_map));
    println!("{}: {} s from {} segment(s)", out.display(), clip.duration, clip.segment_map.len());
    Ok(())
}

fn cmd_subs(transcript: &Path, cutlist: &Path, out: &Path) -> CliResult<()> {
    let t: Transcript = read_doc(transcript)?;
    let c: CutList = read_doc(cutlist)?;
    let subs = generate_subtitles(&t, &segment_map(&c));
    write_bytes(out, subs.to_srt().as_bytes())?;
    println!("{}: {} cue(s)", out.display(), subs.cues.len());
    Ok(())
}

fn cmd_reframe(settings: &Settings, clip: &Path, out: &Path, args: &MergeArgs) -> CliResult<()> {
    require_file(clip)?;
    let cfg = settings.merge_config(args)?;
    let tool = settings.transcoder();
    let info = probe(&tool, clip).map_err(media)?;
    let tmp = tempfile::Builder::new()
        .prefix(".clipsmith-reframe")
        .tempdir_in(parent_dir(out))
        .map_err(|e| CliError::pipeline(format!("{}: {e}", parent_dir(out).display())))?;
    let staged = tmp.path().join("clip.mp4");
    fs::hard_link(clip, &staged)
        .or_else(|_| fs::copy(clip, &staged).map(|_| ()))
        .map_err(|e| CliError::pipeline(format!("{}: {e}", staged.display())))?;
    let art = ClipArtifact {
        path: staged,
        duration: info.duration.unwrap_or_default(),
        segment_map: Vec::new(),
        config_used: cfg.clone(),
        clips: Vec::new(),
    };
    let framed = reframe(&tool, &art, cfg.orientation).map_err(media)?;
    place(&framed.path, out)?;
    println!("{}: {:?}", out.display(), cfg.orientation);
    Ok(())
}

fn cmd_eval(settings: &Settings, files: &[PathBuf], tau: Option<f64>, out: Option<&Path>, csv: Option<&Path>) -> CliResult<()> {
    if files.len() % 2 != 0 {
        return Err(CliError::Usage("eval takes pairs of transcript and cut-list files".into()));
    }
    let tau = settings.tau(tau)?;
    let provider = backends(settings)?.embedding;
    let mut cfg = MetricsConfig::with_tau(tau).map_err(|e| CliError::Usage(e.to_string()))?;
    cfg.provider = provider.id().to_string();
    let mut jobs = Vec::new();
    for pair in files.chunks(2) {
        let t: Transcript = read_doc(&pair[0])?;
        let c: CutList = read_doc(&pair[1])?;
        let r = build_report(&t, &c, &cfg, &*provider)
            .map_err(|e| CliError::pipeline(format!("{}: {e}", pair[1].display())))?;
        jobs.push((pair, r));
    }
    if let Some(out) = out {
        match jobs.as_slice() {
            [(_, r)] => write_doc(out, r)?,
            many => {
                let docs: Vec<_> = many
                    .iter()
                    .map(|(pair, r)| serde_json::json!({ "transcript": pair[0], "cutlist": pair[1], "report": r }))
                    .collect();
                write_doc(out, &docs)?;
            }
        }
    }
    if let Some(csv) = csv {
        let rows: Vec<(String, MetricsReport)> = jobs.iter().map(|(pair, r)| (stem(&pair[1]), r.clone())).collect();
        write_bytes(csv, batch_csv(&rows).as_bytes())?;
    }
    let reports: Vec<MetricsReport> = jobs.into_iter().map(|(_, r)| r).collect();
    print!("{}", batch_table(&reports, tau));
    Ok(())
}

fn service_error(e: ServiceError) -> CliError {
    match e {
        ServiceError::UnsupportedFormat(_) | ServiceError::BadRequest(_) => CliError::Input(e.to_string()),
        other => CliError::pipeline(other),
    }
}

fn cmd_e2e(
    settings: &Settings,
    video: &Path,
    out: &Path,
    selector: &SelectorArgs,
    persona: &PersonaArgs,
    merge: &MergeArgs,
    tau: Option<f64>,
) -> CliResult<()> {
    require_file(video)?;
    let persona = settings.persona(persona)?;
    let cfg = settings.pipeline_config(settings.selector(selector), settings.merge_config(merge)?, settings.tau(tau)?);
    let store = FsJobStore::open(out).map_err(service_error)?;
    let digest = sha256_file(video).map_err(|e| CliError::Input(format!("{}: {e}", video.display())))?;
    let id = IdStrategy::Deterministic.make(&digest, &persona.id(), |_| false);
    if store.exists(&id) {
        store.remove(&id).map_err(service_error)?;
    }
    let clock: Arc<dyn Clock> = if settings.mock {
        Arc::new(FixedClock::default())
    } else {
        Arc::new(SystemClock)
    };
    let p = Pipeline::new(Arc::new(store), backends(settings)?, cfg)
        .with_clock(clock)
        .with_ids(IdStrategy::Deterministic);
    let m = p.create_job(JobSource::Path(video.to_path_buf()), persona).map_err(service_error)?;
    let m = p.run_to_end(&m.job_id).map_err(service_error)?;
    let dir = p.store().dir(&m.job_id);
    let c: CutList = read_doc(&p.artifact(&m.job_id, ArtifactKind::Cutlist).map_err(service_error)?.0)?;
    println!("job {} {} in {}", m.job_id, m.state, dir.display());
    print!("{}", describe_cutlist(&c));
    if let Some(rel) = &m.artifacts.clip {
        println!("clip: {}", dir.join(rel).display());
    }
    match p.metrics(&m.job_id, None) {
        Ok(r) => {
            println!("metrics: {}", dir.join(m.artifacts.metrics.as_deref().unwrap_or("metrics.json")).display());
            print_report(&r);
        }
        Err(e) => println!("metrics unavailable: {e}"),
    }
    Ok(())
}

fn cmd_serve(settings: &Settings, listen: Option<SocketAddr>, workdir: Option<PathBuf>, selector: &SelectorArgs) -> CliResult<()> {
    let addr = settings.listen(listen);
    let root = settings.workdir(workdir);
    let cfg = settings.pipeline_config(
        settings.selector(selector),
        settings.merge_config(&MergeArgs::default())?,
        settings.tau(None)?,
    );
    let store = FsJobStore::open(&root).map_err(service_error)?;
    let pipeline = Arc::new(Pipeline::new(Arc::new(store), backends(settings)?, cfg));
    println!("serving jobs from {} on http://{addr}", root.display());
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::pipeline)?;
    rt.block_on(clipsmith_service::http::serve(addr, pipeline))
        .map_err(|e| CliError::pipeline(format!("{addr}: {e}")))
}

