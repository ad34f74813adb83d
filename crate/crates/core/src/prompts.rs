//! Prompt templates for acting, lesson extraction and procedure
//! generalization. External generators receive exactly these texts, and the
//! token-proxy accounting counts them.

use serde::Deserialize;

use crate::error::{MemError, Result};
use crate::types::{Episode, Outcome};

pub const LESSON_SYSTEM_PROMPT: &str =
    "You are a reflective learning assistant that extracts actionable lessons from task experiences.";

pub const GENERALIZE_SYSTEM_PROMPT: &str =
    "You extract generalized, reusable strategies from task experiences.";

/// Inputs of the agent action prompt.
#[derive(Debug, Clone, Default)]
pub struct ActionPrompt<'a> {
    pub agent_id: &'a str,
    pub agent_profile: &'a str,
    /// Optional; the line is dropped when empty.
    pub reasoning_prompt: &'a str,
    /// Rendered memory block; the Past Experience section is dropped when empty.
    pub memory_block: &'a str,
    pub task: &'a str,
    pub agent_descriptions: &'a str,
}

pub fn render_action_prompt(p: &ActionPrompt<'_>) -> String {
    let mut out = format!("You are {}: {}\n", p.agent_id, p.agent_profile);
    if !p.reasoning_prompt.is_empty() {
        out.push_str(p.reasoning_prompt);
        out.push('\n');
    }
    if !p.memory_block.is_empty() {
        out.push_str("--- Past Experience ---\n");
        out.push_str(p.memory_block);
        out.push_str("\n--- End Past Experience ---\n");
    }
    out.push_str("\n=== CURRENT TASK ===\n");
    out.push_str(p.task);
    out.push_str("\n=== END TASK ===\n\nOther agents you can interact with:\n");
    out.push_str(p.agent_descriptions);
    out.push_str("\nYou do not have to communicate with other agents.\n");
    out
}

/// Inputs of the lesson extraction user prompt.
#[derive(Debug, Clone, Default)]
pub struct LessonPrompt<'a> {
    pub task_description: &'a str,
    pub actions: &'a [String],
    pub outcome: Option<&'a Outcome>,
    /// Role section used by environments with role-specific agents.
    pub role: Option<&'a str>,
    pub task_summary: Option<&'a str>,
}

pub fn outcome_text(o: &Outcome) -> String {
    let verdict = if o.success { "success" } else { "failure" };
    format!("{verdict} (TS={:.2}, CS={:.2})", o.ts, o.cs)
}

pub fn render_lesson_prompt(p: &LessonPrompt<'_>) -> String {
    let mut out = String::from(
        "Based on the following task experience, extract 1-3 concise, actionable lessons learned.\n\
         Focus on CONCRETE actions: which tool functions should have been called, what patterns worked or failed, and what specific steps to take next time.\n\
         Do NOT suggest vague advice like 'communicate better' or 'provide clearer instructions'.\n\
         Instead, suggest specific tool calls or strategies.\n\n",
    );
    if let Some(role) = p.role.filter(|r| !r.is_empty()) {
        out.push_str(&format!("Your role: {role}\n"));
    }
    out.push_str(&format!("Task: {}\n\n", p.task_description));
    if let Some(summary) = p.task_summary.filter(|s| !s.is_empty()) {
        out.push_str(&format!("Task summary: {summary}\n"));
    }
    out.push_str(&format!("Actions taken: {}\n", p.actions.join("; ")));
    let (outcome, focus) = match p.outcome {
        Some(o) if o.success => (
            outcome_text(o),
            "The task succeeded. Focus on the steps that made it work so they can be repeated.",
        ),
        Some(o) => (
            outcome_text(o),
            "The task had issues. Focus on what went wrong and which steps to take instead.",
        ),
        None => ("unknown".to_string(), "Focus on the steps that mattered most."),
    };
    out.push_str(&format!("Outcome: {outcome}\n\n{focus}\n"));
    out.push_str("Return the lessons as a JSON array of strings. Example:\n[\"Lesson 1\", ...]\n");
    out
}

pub fn render_generalize_prompt(episodes: &[&Episode]) -> String {
    let mut out = String::from(
        "Based on the following successful task experiences, extract a generalized\n\
         and actionable strategy and skill that can be reused in similar future situations.\n\
         Avoid vague advice.\n\n",
    );
    for (i, e) in episodes.iter().enumerate() {
        out.push_str(&format!(
            "Episode {}:\n  Task: {}\n  Lessons: {}\n  Outcome: {}\n\n",
            i + 1,
            e.task_description,
            e.lessons.join("; "),
            outcome_text(&e.outcome)
        ));
    }
    out.push_str(
        "Respond in JSON format:\n{\"title\": \"Short descriptive title\",\n \"knowledge_content\": \"Detailed strategy and skill description\"}\n",
    );
    out
}

/// Extracts the first JSON value delimited by `open`/`close` from a model
/// response that may wrap it in prose or code fences.
fn json_slice(text: &str, open: char, close: char) -> Option<&str> {
    let start = text.find(open)?;
    let end = text.rfind(close)?;
    (end > start).then(|| &text[start..=end])
}

/// Parses a lesson extraction response (a JSON array of strings).
pub fn parse_lessons_response(text: &str) -> Result<Vec<String>> {
    let slice = json_slice(text, '[', ']')
        .ok_or_else(|| MemError::Generator("no JSON array in lesson response".into()))?;
    let lessons: Vec<String> =
        serde_json::from_str(slice).map_err(|e| MemError::Generator(e.to_string()))?;
    Ok(lessons)
}

/// Parses a generalization response into `(title, knowledge)`.
pub fn parse_generalize_response(text: &str) -> Result<(String, String)> {
    #[derive(Deserialize)]
    struct Reply {
        title: String,
        knowledge_content: String,
    }
    let slice = json_slice(text, '{', '}')
        .ok_or_else(|| MemError::Generator("no JSON object in generalization response".into()))?;
    let r: Reply = serde_json::from_str(slice).map_err(|e| MemError::Generator(e.to_string()))?;
    Ok((r.title, r.knowledge_content))
}

/// Whitespace-token count used as the offline stand-in for provider tokens.
pub fn token_proxy(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}
