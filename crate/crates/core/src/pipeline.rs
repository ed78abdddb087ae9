//! Question-level orchestration and the batch runner.

use std::collections::{HashMap, HashSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{
    BackendError, Cache, Dispatcher, HttpTransport, LanguageModel, Mode, RetryPolicy, SearchEngine,
    Transcript, WikiClient,
};
use crate::classify::{ClassifierModel, ClassifyError};
use crate::config::{Config, ConfigError};
use crate::decompose::{needs_simplification, Decomposer, Simplified};
use crate::generate::{run_hop, HopBackends, HopSettings};
use crate::model::{
    deserialize_result, serialize_result, DecompositionPlan, Question, QuestionKind, QuestionResult,
};
use crate::par;
use crate::prompt::{PromptError, Prompts};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Classifier(#[from] ClassifyError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("I/O failure: {0}")]
    Io(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |e| PipelineError::Io(format!("{}: {e}", path.display()))
}

/// Service handles used by the pipeline. The two language models may point
/// at the same dispatcher; requests carry their own model ids.
#[derive(Clone)]
pub struct Backends {
    pub decomposer: Arc<dyn LanguageModel>,
    pub answerer: Arc<dyn LanguageModel>,
    pub search: Arc<dyn SearchEngine>,
    pub wiki: Arc<dyn WikiClient>,
}

impl Backends {
    pub fn shared(dispatcher: Arc<Dispatcher>) -> Self {
        Self {
            decomposer: dispatcher.clone(),
            answerer: dispatcher.clone(),
            search: dispatcher.clone(),
            wiki: dispatcher,
        }
    }
}

/// Builds the dispatcher described by `config`: HTTP transport, optional
/// cache, transcript for record/replay.
pub fn build_dispatcher(config: &Config) -> Result<Dispatcher, PipelineError> {
    let transcript = || -> Result<Arc<Transcript>, PipelineError> {
        let path = config.transcript.as_ref().ok_or_else(|| {
            PipelineError::InvalidInput(format!("{:?} mode needs a transcript path", config.mode))
        })?;
        Ok(Arc::new(Transcript::open(path)?))
    };
    let retry = RetryPolicy {
        retries: config.retries,
        base: Duration::from_millis(config.retry_base_ms),
        factor: config.retry_factor,
    };
    let dispatcher = match config.mode {
        Mode::Replay => return Ok(Dispatcher::replay(transcript()?)),
        Mode::Record => Dispatcher::record(
            Arc::new(HttpTransport::new(config.http.clone())),
            transcript()?,
        ),
        Mode::Live => Dispatcher::live(Arc::new(HttpTransport::new(config.http.clone()))),
    };
    let dispatcher = dispatcher.with_retry(retry);
    Ok(match &config.cache_dir {
        Some(dir) => dispatcher.with_cache(Cache::new(
            dir,
            config.cache_ttl_secs.map(Duration::from_secs),
        )),
        None => dispatcher,
    })
}

/// Everything recorded while answering one question.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub result: QuestionResult,
    pub simplified: Option<Simplified>,
    pub plan: Option<DecompositionPlan>,
}

/// One line of batch input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionInput {
    pub id: String,
    pub question: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RoundSummary {
    pub round: usize,
    pub attempted: usize,
    pub answered: usize,
    pub failed: usize,
    /// Questions answered in this round that had failed in an earlier one.
    pub recovered: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BatchSummary {
    pub total: usize,
    /// Already answered in an existing output file and not rerun.
    pub resumed: usize,
    pub answered: usize,
    pub failed: usize,
    pub rounds: Vec<RoundSummary>,
}

pub struct Pipeline {
    pub config: Config,
    pub backends: Backends,
    pub classifier: ClassifierModel,
    pub prompts: Prompts,
    hop_settings: HopSettings,
}

impl Pipeline {
    pub fn new(
        config: Config,
        backends: Backends,
        mut classifier: ClassifierModel,
    ) -> Result<Self, PipelineError> {
        config
            .validate()
            .map_err(|e| ConfigError::Invalid("config".into(), e))?;
        let prompts = Prompts::load(config.template_dir.as_deref())?;
        if let Some(t) = config.classifier_threshold {
            classifier.threshold = t;
        }
        let hop_settings = config.hop_settings();
        Ok(Self {
            config,
            backends,
            classifier,
            prompts,
            hop_settings,
        })
    }

    /// Builds backends from the config and loads the classifier it names.
    pub fn from_config(config: Config) -> Result<Self, PipelineError> {
        let path = config
            .classifier_model
            .clone()
            .ok_or_else(|| PipelineError::InvalidInput("config has no classifier_model".into()))?;
        let classifier = ClassifierModel::load(&path)?;
        let backends = Backends::shared(Arc::new(build_dispatcher(&config)?));
        Self::new(config, backends, classifier)
    }

    fn decomposer(&self) -> Decomposer<'_> {
        Decomposer {
            llm: self.backends.decomposer.as_ref(),
            prompts: &self.prompts,
            model_id: self.config.decompose_model.clone(),
            temperature: self.config.temperature,
            max_hops: self.config.max_hops,
        }
    }

    fn classify_or_direct(&self, text: &str) -> Result<QuestionKind, String> {
        self.classifier
            .classify(text)
            .map_err(|e| format!("classification failed: {e}"))
    }

    pub fn answer_question(&self, question: Question) -> QuestionResult {
        self.answer_traced(question).result
    }

    /// Simplify when needed, classify, plan, then run the hop chain. Each
    /// hop's normalized short answer is the next hop's anchor.
    pub fn answer_traced(&self, mut question: Question) -> Trace {
        let id = question.id.clone();
        let mut trace = Trace {
            result: QuestionResult::failed(id.clone(), QuestionKind::Direct, vec![], String::new()),
            simplified: None,
            plan: None,
        };
        let fail = |trace: &mut Trace, kind, hops, reason: String| {
            tracing::warn!("question {id} failed: {reason}");
            trace.result = QuestionResult::failed(id.clone(), kind, hops, reason);
        };
        let decomposer = self.decomposer();

        if needs_simplification(&question) {
            match decomposer.simplify(&question) {
                Ok(s) => {
                    if let Err(e) = question.set_simplified(s.text.clone()) {
                        let kind = self
                            .classify_or_direct(&question.text)
                            .unwrap_or(QuestionKind::Direct);
                        fail(
                            &mut trace,
                            kind,
                            vec![],
                            format!("simplification failed: {e}"),
                        );
                        return trace;
                    }
                    trace.simplified = Some(s);
                }
                Err(e) => {
                    let kind = self
                        .classify_or_direct(&question.text)
                        .unwrap_or(QuestionKind::Direct);
                    fail(
                        &mut trace,
                        kind,
                        vec![],
                        format!("simplification failed: {e}"),
                    );
                    return trace;
                }
            }
        }

        let kind = match self.classify_or_direct(question.effective_text()) {
            Ok(k) => k,
            Err(reason) => {
                fail(&mut trace, QuestionKind::Direct, vec![], reason);
                return trace;
            }
        };
        question.kind = Some(kind);

        let plan = match kind {
            QuestionKind::Sequential => decomposer.decompose_sequential(&question),
            QuestionKind::Direct => decomposer.extract_direct(&question),
        };
        let plan = match plan {
            Ok(p) => p,
            Err(e) => {
                fail(
                    &mut trace,
                    kind,
                    vec![],
                    format!("decomposition failed: {e}"),
                );
                return trace;
            }
        };

        let hop_backends = HopBackends {
            answerer: self.backends.answerer.as_ref(),
            search: self.backends.search.as_ref(),
            wiki: self.backends.wiki.as_ref(),
        };
        let mut anchor = plan.initial_anchor.clone();
        let mut hops = Vec::with_capacity(plan.steps.len());
        for step in &plan.steps {
            match run_hop(
                hop_backends,
                &self.hop_settings,
                &self.prompts.answer,
                step,
                &anchor,
            ) {
                Ok(hop) => {
                    anchor = hop.normalized_short.clone();
                    hops.push(hop);
                }
                Err(e) => {
                    trace.plan = Some(plan.clone());
                    fail(&mut trace, kind, hops, e.to_string());
                    return trace;
                }
            }
        }
        trace.result = QuestionResult::answered(id, kind, hops);
        trace.plan = Some(plan);
        trace
    }

    fn answer_all(
        &self,
        questions: &[Question],
        output: &Path,
    ) -> Result<Vec<QuestionResult>, PipelineError> {
        let mut out = Vec::with_capacity(questions.len());
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(output)
            .map_err(io_err(output))?;
        for chunk in questions.chunks(self.config.chunk_size) {
            let results = par::with_workers(self.config.workers, || {
                par::map(chunk, |q| self.answer_question(q.clone()))
            });
            let mut buf = String::new();
            for r in &results {
                buf.push_str(&serialize_result(r));
                buf.push('\n');
            }
            file.write_all(buf.as_bytes()).map_err(io_err(output))?;
            file.flush().map_err(io_err(output))?;
            out.extend(results);
        }
        Ok(out)
    }

    /// Answers every question in `input`, reprocessing failures, and leaves
    /// `output` holding one result per input question in input order.
    ///
    /// Results are appended to `output` chunk by chunk while the run is in
    /// progress. Ids already answered in an existing `output` are kept and
    /// not rerun.
    pub fn run_batch(&self, input: &Path, output: &Path) -> Result<BatchSummary, PipelineError> {
        let questions = read_questions(input)?;
        if let Some(dir) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let mut results: HashMap<String, QuestionResult> = scan_existing(output)?
            .into_iter()
            .filter(|(_, r)| r.is_answered())
            .collect();
        let wanted: HashSet<&str> = questions.iter().map(|q| q.id.as_str()).collect();
        results.retain(|id, _| wanted.contains(id.as_str()));

        let mut summary = BatchSummary {
            total: questions.len(),
            resumed: results.len(),
            ..BatchSummary::default()
        };
        let mut ever_failed: HashSet<String> = HashSet::new();
        for round in 1..=self.config.reprocess_rounds + 1 {
            let pending: Vec<Question> = questions
                .iter()
                .filter(|q| !results.get(&q.id).is_some_and(QuestionResult::is_answered))
                .cloned()
                .collect();
            if pending.is_empty() {
                break;
            }
            tracing::info!("round {round}: {} questions", pending.len());
            let done = self.answer_all(&pending, output)?;
            let mut rs = RoundSummary {
                round,
                attempted: done.len(),
                ..RoundSummary::default()
            };
            for r in done {
                if r.is_answered() {
                    rs.answered += 1;
                    if ever_failed.contains(&r.question_id) {
                        rs.recovered += 1;
                    }
                } else {
                    rs.failed += 1;
                    ever_failed.insert(r.question_id.clone());
                }
                results.insert(r.question_id.clone(), r);
            }
            summary.rounds.push(rs);
        }

        let mut body = String::new();
        for q in &questions {
            let r = &results[&q.id];
            if r.is_answered() {
                summary.answered += 1;
            } else {
                summary.failed += 1;
            }
            body.push_str(&serialize_result(r));
            body.push('\n');
        }
        let dir = output
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        crate::backends::write_atomic(dir, output, body.as_bytes())?;
        Ok(summary)
    }
}

/// Reads `{id, question}` lines. Blank lines are skipped; duplicate ids and
/// empty questions are rejected.
pub fn read_questions(path: &Path) -> Result<Vec<Question>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at =
            |m: String| PipelineError::InvalidInput(format!("{}:{}: {m}", path.display(), n + 1));
        let rec: QuestionInput = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        if !seen.insert(rec.id.clone()) {
            return Err(at(format!("duplicate id {:?}", rec.id)));
        }
        out.push(Question::new(rec.id, rec.question).map_err(|e| at(e.to_string()))?);
    }
    Ok(out)
}

/// Results already present in `path`; the last record per id wins and
/// unreadable lines (such as a line cut short by an interruption) are
/// skipped.
pub fn scan_existing(path: &Path) -> Result<HashMap<String, QuestionResult>, PipelineError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(HashMap::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut out = HashMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match deserialize_result(line) {
            Ok(r) => {
                out.insert(r.question_id.clone(), r);
            }
            Err(e) => tracing::warn!("skipping unreadable output line: {e}"),
        }
    }
    Ok(out)
}
