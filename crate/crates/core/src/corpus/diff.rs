//! Unified diffs to single-hunk instances.
//!
//! Lines keep their terminators, so a file without a final newline survives
//! a round trip (the diff marks it with `\ No newline at end of file`).

use super::RepairInstance;
use crate::codeparse::LanguageId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Context,
    Removed,
    Added,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HunkLine {
    pub kind: LineKind,
    /// Line text including its terminator, if it had one.
    pub text: String,
}

/// One `@@` section of a unified diff. Starts are 1-based as in the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    pub lines: Vec<HunkLine>,
}

impl Hunk {
    /// Context and removed lines: the hunk as it reads before the fix.
    pub fn old_text(&self) -> String {
        self.side(LineKind::Removed)
    }

    /// Context and added lines: the hunk as it reads after the fix.
    pub fn new_text(&self) -> String {
        self.side(LineKind::Added)
    }

    fn side(&self, keep: LineKind) -> String {
        self.lines
            .iter()
            .filter(|l| l.kind == LineKind::Context || l.kind == keep)
            .map(|l| l.text.as_str())
            .collect()
    }

    fn old_lines(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().filter(|l| l.kind != LineKind::Added).map(|l| l.text.as_str())
    }

    fn new_lines(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().filter(|l| l.kind != LineKind::Removed).map(|l| l.text.as_str())
    }

    /// 0-based index of the first old line.
    fn old_index(&self) -> usize {
        if self.old_len == 0 {
            self.old_start
        } else {
            self.old_start - 1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("diff line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("diff contains no hunks")]
    NoHunks,
    #[error("hunk {hunk} does not match the file at line {line}")]
    Mismatch { hunk: usize, line: usize },
    #[error("hunk {hunk} overlaps or precedes the previous hunk")]
    Overlap { hunk: usize },
}

fn syntax(line: usize, message: impl Into<String>) -> DiffError {
    DiffError::Syntax { line, message: message.into() }
}

fn parse_range(s: &str, line: usize) -> Result<(usize, usize), DiffError> {
    let bad = || syntax(line, format!("bad range `{s}`"));
    let (start, len) = match s.split_once(',') {
        Some((a, b)) => (a, b),
        None => (s, "1"),
    };
    Ok((start.parse().map_err(|_| bad())?, len.parse().map_err(|_| bad())?))
}

fn parse_header(header: &str, line: usize) -> Result<Hunk, DiffError> {
    let inner = header
        .strip_prefix("@@ ")
        .and_then(|rest| rest.split_once(" @@"))
        .map(|(ranges, _)| ranges)
        .ok_or_else(|| syntax(line, "malformed hunk header"))?;
    let (old, new) = inner.split_once(' ').ok_or_else(|| syntax(line, "malformed hunk header"))?;
    let old = old.strip_prefix('-').ok_or_else(|| syntax(line, "missing old range"))?;
    let new = new.strip_prefix('+').ok_or_else(|| syntax(line, "missing new range"))?;
    let (old_start, old_len) = parse_range(old, line)?;
    let (new_start, new_len) = parse_range(new, line)?;
    if old_len > 0 && old_start == 0 {
        return Err(syntax(line, "old range starts at 0"));
    }
    Ok(Hunk { old_start, old_len, new_start, new_len, lines: Vec::new() })
}

/// Parses every hunk of a unified diff. File headers and `diff`/`index`
/// lines before the first hunk are ignored.
pub fn extract_hunks(diff: &str) -> Result<Vec<Hunk>, DiffError> {
    let mut hunks: Vec<Hunk> = Vec::new();
    // remaining (old, new) line counts of the hunk being read
    let mut remaining = (0usize, 0usize);
    for (i, raw) in diff.split_inclusive('\n').enumerate() {
        let line_no = i + 1;
        let body = raw.strip_suffix('\n').unwrap_or(raw);
        if body.starts_with('\\') {
            let last = hunks
                .last_mut()
                .and_then(|h| h.lines.last_mut())
                .ok_or_else(|| syntax(line_no, "no-newline marker outside a hunk"))?;
            if let Some(stripped) = last.text.strip_suffix('\n') {
                last.text.truncate(stripped.len());
            }
            continue;
        }
        if remaining == (0, 0) {
            if body.starts_with("@@") {
                let hunk = parse_header(body, line_no)?;
                remaining = (hunk.old_len, hunk.new_len);
                hunks.push(hunk);
            } else if !hunks.is_empty() && !(body.starts_with("diff ") || body.starts_with("--- ") || body.starts_with("+++ ") || body.starts_with("index ")) && !body.is_empty() {
                return Err(syntax(line_no, "line outside a hunk"));
            }
            continue;
        }
        let (kind, text) = match body.chars().next() {
            Some(' ') => (LineKind::Context, &body[1..]),
            // some tools strip the space of an empty context line
            None => (LineKind::Context, ""),
            Some('-') => (LineKind::Removed, &body[1..]),
            Some('+') => (LineKind::Added, &body[1..]),
            Some(_) => return Err(syntax(line_no, "hunk ended early")),
        };
        match kind {
            LineKind::Context if remaining.0 > 0 && remaining.1 > 0 => remaining = (remaining.0 - 1, remaining.1 - 1),
            LineKind::Removed if remaining.0 > 0 => remaining.0 -= 1,
            LineKind::Added if remaining.1 > 0 => remaining.1 -= 1,
            _ => return Err(syntax(line_no, "hunk longer than its header says")),
        }
        let hunk = hunks.last_mut().expect("inside a hunk");
        hunk.lines.push(HunkLine { kind, text: format!("{text}\n") });
    }
    if remaining != (0, 0) {
        return Err(syntax(diff.lines().count(), "diff ends inside a hunk"));
    }
    if hunks.is_empty() {
        return Err(DiffError::NoHunks);
    }
    Ok(hunks)
}

fn check_order(hunks: &[Hunk], file_lines: usize) -> Result<(), DiffError> {
    let mut next_free = 0;
    for (i, h) in hunks.iter().enumerate() {
        let start = h.old_index();
        if start < next_free {
            return Err(DiffError::Overlap { hunk: i + 1 });
        }
        if start + h.old_len > file_lines {
            return Err(DiffError::Mismatch { hunk: i + 1, line: file_lines + 1 });
        }
        next_free = start + h.old_len;
    }
    Ok(())
}

fn check_against(hunk: &Hunk, index: usize, file: &[&str]) -> Result<(), DiffError> {
    let start = hunk.old_index();
    for (k, old) in hunk.old_lines().enumerate() {
        if file.get(start + k) != Some(&old) {
            return Err(DiffError::Mismatch { hunk: index + 1, line: start + k + 1 });
        }
    }
    Ok(())
}

/// Applies hunks at their stated positions.
pub fn apply_hunks(before: &str, hunks: &[Hunk]) -> Result<String, DiffError> {
    let file: Vec<&str> = before.split_inclusive('\n').collect();
    check_order(hunks, file.len())?;
    let mut out = String::with_capacity(before.len());
    let mut cursor = 0;
    for (i, h) in hunks.iter().enumerate() {
        check_against(h, i, &file)?;
        let start = h.old_index();
        out.extend(file[cursor..start].iter().copied());
        out.extend(h.new_lines());
        cursor = start + h.old_len;
    }
    out.extend(file[cursor..].iter().copied());
    Ok(out)
}

/// One instance per hunk, ids `hunk-1`, `hunk-2`, ... in diff order.
///
/// `buggy_code` is the hunk's context and removed lines and `fixed_code` its
/// context and added lines, both verified against `before_file`.
pub fn extract_single_hunk(diff: &str, before_file: &str, language: LanguageId) -> Result<Vec<RepairInstance>, DiffError> {
    let hunks = extract_hunks(diff)?;
    let file: Vec<&str> = before_file.split_inclusive('\n').collect();
    check_order(&hunks, file.len())?;
    hunks
        .iter()
        .enumerate()
        .map(|(i, h)| {
            check_against(h, i, &file)?;
            Ok(RepairInstance::new(format!("hunk-{}", i + 1), language, h.old_text(), h.new_text()))
        })
        .collect()
}
