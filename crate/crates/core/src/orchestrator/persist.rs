use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{OrchestratorError, RunRecord};
use crate::model::{Phase, SamplingParams, Speaker};

/// One transcript JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub run_id: String,
    pub seq: usize,
    pub step: u32,
    pub phase: Phase,
    pub speaker: Speaker,
    pub sampling: SamplingParams,
    pub content: String,
    pub blank: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerIndexEntry {
    pub step: u32,
    /// Byte range of the answer body inside `answers.txt`.
    pub offset: usize,
    pub len: usize,
    pub blank: bool,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORD_FILE: &str = "record.json";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const ANSWERS_FILE: &str = "answers.txt";
pub const ANSWER_INDEX_FILE: &str = "answers.json";

fn io(path: &Path, e: impl std::fmt::Display) -> OrchestratorError {
    OrchestratorError::Io(format!("{}: {e}", path.display()))
}

pub fn transcript_lines(record: &RunRecord) -> Vec<TranscriptLine> {
    record
        .transcript
        .iter()
        .enumerate()
        .map(|(seq, m)| TranscriptLine {
            run_id: record.config.run_id.clone(),
            seq,
            step: m.step,
            phase: m.phase,
            speaker: m.speaker,
            sampling: m.sampling,
            content: m.content.clone(),
            blank: m.blank,
        })
        .collect()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), OrchestratorError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io(path, e))
}

impl RunRecord {
    /// Writes manifest, full record, transcript JSONL and the answers file
    /// with its index into `dir`.
    pub fn persist(&self, dir: &Path) -> Result<(), OrchestratorError> {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        write_json(&dir.join(MANIFEST_FILE), &self.config)?;
        write_json(&dir.join(RECORD_FILE), self)?;

        let path = dir.join(TRANSCRIPT_FILE);
        let mut out = fs::File::create(&path).map_err(|e| io(&path, e))?;
        for line in transcript_lines(self) {
            let json = serde_json::to_string(&line).map_err(|e| io(&path, e))?;
            writeln!(out, "{json}").map_err(|e| io(&path, e))?;
        }

        let mut text = String::new();
        let mut index = Vec::with_capacity(self.answers.len());
        for (i, answer) in self.answers.iter().enumerate() {
            let step = i as u32 + 1;
            text.push_str(&format!("===== Step {step} =====\n"));
            index.push(AnswerIndexEntry {
                step,
                offset: text.len(),
                len: answer.len(),
                blank: answer.trim().is_empty(),
            });
            text.push_str(answer);
            text.push_str("\n\n");
        }
        let path = dir.join(ANSWERS_FILE);
        fs::write(&path, text).map_err(|e| io(&path, e))?;
        write_json(&dir.join(ANSWER_INDEX_FILE), &index)
    }
}

pub fn load_record(dir: &Path) -> Result<RunRecord, OrchestratorError> {
    let path = dir.join(RECORD_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io(&path, e))
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptLine>, OrchestratorError> {
    let file = fs::File::open(path).map_err(|e| io(path, e))?;
    let mut lines = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        lines.push(serde_json::from_str(&line).map_err(|e| io(path, format!("line {}: {e}", n + 1)))?);
    }
    Ok(lines)
}

/// Step answers read back through the index.
pub fn load_answers(dir: &Path) -> Result<Vec<String>, OrchestratorError> {
    let index_path = dir.join(ANSWER_INDEX_FILE);
    let index: Vec<AnswerIndexEntry> =
        serde_json::from_str(&fs::read_to_string(&index_path).map_err(|e| io(&index_path, e))?)
            .map_err(|e| io(&index_path, e))?;
    let path = dir.join(ANSWERS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
    index
        .iter()
        .map(|entry| {
            text.get(entry.offset..entry.offset + entry.len)
                .map(str::to_string)
                .ok_or_else(|| io(&path, format!("index entry for step {} is out of range", entry.step)))
        })
        .collect()
}

/// Splits an `answers.txt`-style document on its `===== Step k =====` headers.
/// Hand-written fixtures need no index; trailing newlines of each body are dropped.
pub fn parse_answers_text(text: &str) -> Result<Vec<String>, OrchestratorError> {
    let mut answers: Vec<String> = Vec::new();
    let mut current: Option<String> = None;
    for line in text.split_inclusive('\n') {
        let header = line
            .trim()
            .strip_prefix("===== Step ")
            .and_then(|rest| rest.strip_suffix(" ====="))
            .and_then(|n| n.parse::<usize>().ok());
        match header {
            Some(step) => {
                if let Some(body) = current.take() {
                    answers.push(body.trim_end_matches(['\n', '\r']).to_string());
                }
                if step != answers.len() + 1 {
                    return Err(OrchestratorError::Io(format!(
                        "answers document: expected Step {} header, found Step {step}",
                        answers.len() + 1
                    )));
                }
                current = Some(String::new());
            }
            None => match current.as_mut() {
                Some(body) => body.push_str(line),
                None if line.trim().is_empty() => {}
                None => {
                    return Err(OrchestratorError::Io(
                        "answers document: text before the first step header".into(),
                    ))
                }
            },
        }
    }
    if let Some(body) = current {
        answers.push(body.trim_end_matches(['\n', '\r']).to_string());
    }
    Ok(answers)
}
