//! Annotation tasks and the append-only submission log.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use claimx_core::corpus::{majority_vote, write_claim_corpus, AnnotationRecord, ClaimRecord};
use claimx_core::text::split_sentences;
use serde::{Deserialize, Serialize};

use crate::{ServiceError, API_VERSION};

/// Version of the instructions shown to annotators with each task.
pub const INSTRUCTIONS_VERSION: u32 = 1;

/// Annotators needed before export includes majority-vote gold labels.
pub const GOLD_MIN_ANNOTATORS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnnotationTask {
    pub v: u32,
    pub task_id: u64,
    pub abstract_id: String,
    pub title: String,
    pub sentences: Vec<String>,
    pub instructions_version: u32,
}

/// One line of the task file. Either `sentences` or `abstract_text` must be
/// given; raw text is split once, at load time.
#[derive(Deserialize)]
struct TaskLine {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    title: String,
    #[serde(default)]
    sentences: Option<Vec<String>>,
    #[serde(default)]
    abstract_text: Option<String>,
}

/// A submission as stored in the log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub v: u32,
    pub task_id: u64,
    pub annotator: String,
    pub indices: Vec<usize>,
    pub submitted_at: String,
    /// 1 for the first submission of this annotator on this task, then
    /// incremented on every resubmission.
    pub revision: u64,
}

/// Parses a task file (JSON lines). Task ids are 1-based line positions
/// among non-blank lines.
pub fn load_tasks(path: &Path) -> Result<Vec<AnnotationTask>, ServiceError> {
    let text = fs::read_to_string(path).map_err(|e| ServiceError::Startup(format!("{}: {e}", path.display())))?;
    parse_tasks(&text, &path.display().to_string())
}

pub fn parse_tasks(text: &str, source: &str) -> Result<Vec<AnnotationTask>, ServiceError> {
    let mut tasks = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| ServiceError::Startup(format!("{source}:{}: {m}", i + 1));
        let t: TaskLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let sentences = match (t.sentences, t.abstract_text) {
            (Some(s), _) => s,
            (None, Some(text)) => split_sentences(&text).into_iter().map(|s| s.text).collect(),
            (None, None) => return Err(bad("task needs `sentences` or `abstract_text`".into())),
        };
        if sentences.is_empty() {
            return Err(bad("task has no sentences".into()));
        }
        let task_id = tasks.len() as u64 + 1;
        tasks.push(AnnotationTask {
            v: API_VERSION,
            task_id,
            abstract_id: t.id.unwrap_or_else(|| format!("task-{task_id}")),
            title: t.title,
            sentences,
            instructions_version: INSTRUCTIONS_VERSION,
        });
    }
    Ok(tasks)
}

struct Inner {
    log: File,
    /// Latest submission per `(task_id, annotator)`.
    latest: BTreeMap<(u64, String), Submission>,
}

pub struct AnnotationStore {
    tasks: Vec<AnnotationTask>,
    path: PathBuf,
    inner: Mutex<Inner>,
}

impl AnnotationStore {
    /// Opens (creating if needed) the log at `path` and replays it.
    pub fn open(tasks: Vec<AnnotationTask>, path: &Path) -> Result<Self, ServiceError> {
        let startup = |e: std::io::Error| ServiceError::Startup(format!("{}: {e}", path.display()));
        let mut latest = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(startup)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(startup)?;
                if line.trim().is_empty() {
                    continue;
                }
                let s: Submission = serde_json::from_str(&line)
                    .map_err(|e| ServiceError::Startup(format!("{}:{}: {e}", path.display(), i + 1)))?;
                latest.insert((s.task_id, s.annotator.clone()), s);
            }
        }
        let log = OpenOptions::new().create(true).append(true).open(path).map_err(startup)?;
        log::info!("annotation store {}: {} submissions replayed", path.display(), latest.len());
        Ok(AnnotationStore {
            tasks,
            path: path.to_path_buf(),
            inner: Mutex::new(Inner { log, latest }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn tasks(&self) -> &[AnnotationTask] {
        &self.tasks
    }

    pub fn task(&self, id: u64) -> Option<&AnnotationTask> {
        id.checked_sub(1).and_then(|i| self.tasks.get(i as usize))
    }

    /// Lowest-id task without a submission from `annotator`.
    pub fn next_task(&self, annotator: &str) -> Option<AnnotationTask> {
        let inner = self.inner.lock().expect("store lock");
        self.tasks
            .iter()
            .find(|t| !inner.latest.contains_key(&(t.task_id, annotator.to_string())))
            .cloned()
    }

    /// Validates and durably appends a submission. `expected_revision`,
    /// when given, must equal the annotator's current revision for the task
    /// (0 before any submission), otherwise the write is refused.
    pub fn submit(
        &self,
        task_id: u64,
        annotator: &str,
        mut indices: Vec<usize>,
        expected_revision: Option<u64>,
    ) -> Result<Submission, ServiceError> {
        let task = self.task(task_id).ok_or(ServiceError::UnknownTask(task_id))?;
        if annotator.trim().is_empty() {
            return Err(ServiceError::BadRequest("annotator must be non-empty".into()));
        }
        let n = task.sentences.len();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(ServiceError::Unprocessable(format!(
                "index {bad} out of range for a {n}-sentence abstract"
            )));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(ServiceError::Unprocessable("indices must be unique".into()));
        }
        let mut inner = self.inner.lock().expect("store lock");
        let key = (task_id, annotator.to_string());
        let current = inner.latest.get(&key).map_or(0, |s| s.revision);
        if let Some(expected) = expected_revision {
            if expected != current {
                return Err(ServiceError::Conflict { current });
            }
        }
        let sub = Submission {
            v: API_VERSION,
            task_id,
            annotator: annotator.to_string(),
            indices,
            submitted_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            revision: current + 1,
        };
        let mut line = serde_json::to_string(&sub).expect("submission serialises");
        line.push('\n');
        inner
            .log
            .write_all(line.as_bytes())
            .and_then(|_| inner.log.sync_data())
            .map_err(|e| ServiceError::Internal(format!("append to {}: {e}", self.path.display())))?;
        inner.latest.insert(key, sub.clone());
        Ok(sub)
    }

    /// Claim-corpus records for every task with at least one submission.
    pub fn export_records(&self) -> Vec<ClaimRecord> {
        let inner = self.inner.lock().expect("store lock");
        let mut out = Vec::new();
        for task in &self.tasks {
            let annotations: Vec<AnnotationRecord> = inner
                .latest
                .range((task.task_id, String::new())..)
                .take_while(|((id, _), _)| *id == task.task_id)
                .map(|(_, s)| {
                    let mut labels = vec![false; task.sentences.len()];
                    for &i in &s.indices {
                        labels[i] = true;
                    }
                    AnnotationRecord {
                        abstract_id: task.abstract_id.clone(),
                        annotator_id: s.annotator.clone(),
                        labels,
                        timestamp: Some(s.submitted_at.clone()),
                    }
                })
                .collect();
            if annotations.is_empty() {
                continue;
            }
            let gold_labels = if annotations.len() >= GOLD_MIN_ANNOTATORS {
                majority_vote(&annotations).ok().map(|v| v.labels)
            } else {
                None
            };
            out.push(ClaimRecord {
                v: 1,
                id: task.abstract_id.clone(),
                title: task.title.clone(),
                sentences: task.sentences.clone(),
                annotations,
                gold_labels,
            });
        }
        out
    }

    pub fn export(&self) -> String {
        write_claim_corpus(&self.export_records())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tasks() -> Vec<AnnotationTask> {
        parse_tasks(
            concat!(
                r#"{"id":"p1","title":"A","abstract_text":"We did this. We found that."}"#,
                "\n",
                r#"{"title":"B","sentences":["s1","s2","s3","s4","s5"]}"#,
                "\n"
            ),
            "tasks.jsonl",
        )
        .unwrap()
    }

    #[test]
    fn tasks_are_split_once_and_numbered() {
        let t = tasks();
        assert_eq!(t[0].sentences, vec!["We did this.", "We found that."]);
        assert_eq!((t[0].task_id, t[1].task_id), (1, 2));
        assert_eq!(t[1].abstract_id, "task-2");
    }

    #[test]
    fn per_annotator_queue() {
        let dir = tempfile::tempdir().unwrap();
        let store = AnnotationStore::open(tasks(), &dir.path().join("log.jsonl")).unwrap();
        assert_eq!(store.next_task("a").unwrap().task_id, 1);
        store.submit(1, "a", vec![1], None).unwrap();
        assert_eq!(store.next_task("a").unwrap().task_id, 2);
        assert_eq!(store.next_task("b").unwrap().task_id, 1);
        store.submit(2, "a", vec![], None).unwrap();
        assert!(store.next_task("a").is_none());
    }

    #[test]
    fn guards() {
        let dir = tempfile::tempdir().unwrap();
        let store = AnnotationStore::open(tasks(), &dir.path().join("log.jsonl")).unwrap();
        assert!(matches!(store.submit(9, "a", vec![], None), Err(ServiceError::UnknownTask(9))));
        assert!(matches!(store.submit(2, "a", vec![7], None), Err(ServiceError::Unprocessable(_))));
        assert!(matches!(store.submit(2, "a", vec![1, 1], None), Err(ServiceError::Unprocessable(_))));
        store.submit(2, "a", vec![1], Some(0)).unwrap();
        assert!(matches!(
            store.submit(2, "a", vec![2], Some(0)),
            Err(ServiceError::Conflict { current: 1 })
        ));
        assert_eq!(store.submit(2, "a", vec![2], Some(1)).unwrap().revision, 2);
    }

    #[test]
    fn replay_restores_latest_submissions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        {
            let store = AnnotationStore::open(tasks(), &path).unwrap();
            store.submit(1, "a", vec![0], None).unwrap();
            store.submit(1, "a", vec![1], None).unwrap();
        }
        let store = AnnotationStore::open(tasks(), &path).unwrap();
        let rec = store.export_records();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec[0].annotations[0].labels, vec![false, true]);
        assert!(rec[0].gold_labels.is_none());
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 2);
    }
}
