use super::{ModelStyle, PromptTemplate, Segment, TemplateError, TemplateKind};
use crate::corpus::KnowledgeKind;

fn parse_error(token: &str, offset: usize, message: impl Into<String>) -> TemplateError {
    TemplateError::Parse { token: token.to_string(), offset, message: message.into() }
}

#[derive(Default)]
struct Header {
    kind: Option<TemplateKind>,
    style: Option<ModelStyle>,
    id: Option<String>,
}

fn parse_header(line: &str) -> Result<Header, TemplateError> {
    let mut header = Header::default();
    for field in line.trim_start_matches('#').split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| TemplateError::Header { message: format!("expected key=value, got `{field}`") })?;
        match key {
            "kind" => header.kind = Some(value.parse()?),
            "style" => header.style = Some(value.parse()?),
            "id" => header.id = Some(value.to_string()),
            _ => return Err(TemplateError::Header { message: format!("unknown key `{key}`") }),
        }
    }
    Ok(header)
}

/// Parses a template file: an optional `#kind=.. style=.. id=..` header line
/// followed by the DSL text. One trailing newline is ignored.
///
/// Without a header the kind is inferred from the slots, the style defaults
/// to infilling and the id to `custom`.
pub fn parse_template(text: &str) -> Result<PromptTemplate, TemplateError> {
    let (header, body, body_offset) = match text.strip_prefix('#') {
        Some(_) => {
            let end = text.find('\n').unwrap_or(text.len());
            (parse_header(&text[..end])?, text.get(end + 1..).unwrap_or(""), end + 1)
        }
        None => (Header::default(), text, 0),
    };
    let body = body.strip_suffix('\n').map(|b| b.strip_suffix('\r').unwrap_or(b)).unwrap_or(body);
    let segments = parse_body(body, body_offset, header.kind)?;
    let kind = match header.kind {
        Some(k) => k,
        None => infer_kind(&segments)?,
    };
    let template = PromptTemplate {
        id: header.id.unwrap_or_else(|| "custom".into()),
        kind,
        model_style: header.style.unwrap_or_default(),
        segments,
    };
    template.validate()?;
    Ok(template)
}

fn infer_kind(segments: &[Segment]) -> Result<TemplateKind, TemplateError> {
    let softs: Vec<bool> = segments
        .iter()
        .filter_map(|s| match s {
            Segment::SoftSlot { init, .. } => Some(init.is_some()),
            _ => None,
        })
        .collect();
    let knowledge = segments.iter().any(|s| matches!(s, Segment::KnowledgeSlot { .. }));
    Ok(match (knowledge, softs.is_empty()) {
        (true, true) => TemplateKind::KpHard,
        (true, false) => TemplateKind::KpSoft,
        (false, true) => TemplateKind::Hbp,
        (false, false) if softs.iter().all(|&i| i) => TemplateKind::SbpInitialized,
        (false, false) if softs.iter().all(|&i| !i) => TemplateKind::SbpRandom,
        _ => {
            return Err(TemplateError::Header {
                message: "soft slots mix initialized and random; declare the kind".into(),
            })
        }
    })
}

struct Builder {
    segments: Vec<Segment>,
    literal: String,
    softs: usize,
    declared: Option<TemplateKind>,
}

impl Builder {
    fn flush(&mut self) {
        let text = std::mem::take(&mut self.literal);
        if !text.trim().is_empty() {
            self.segments.push(Segment::Literal { text });
        }
    }

    fn push_slot(&mut self, slot: Segment, token: &str, offset: usize) -> Result<(), TemplateError> {
        let duplicate = |name| parse_error(token, offset, format!("duplicate {name} slot"));
        match &slot {
            Segment::InputSlot if self.segments.contains(&Segment::InputSlot) => return Err(duplicate("input")),
            Segment::MaskSlot if self.segments.contains(&Segment::MaskSlot) => return Err(duplicate("mask")),
            Segment::SoftSlot { init, .. } => match self.declared {
                Some(k @ (TemplateKind::Hbp | TemplateKind::KpHard)) => {
                    return Err(parse_error(token, offset, format!("soft token in a {k} template")))
                }
                Some(TemplateKind::SbpRandom) if init.is_some() => {
                    return Err(parse_error(token, offset, "init word in an sbp_random template"))
                }
                Some(TemplateKind::SbpInitialized) if init.is_none() => {
                    return Err(parse_error(token, offset, "soft token without init word in an sbp_initialized template"))
                }
                _ => {}
            },
            Segment::KnowledgeSlot { .. } => {
                if let Some(k) = self.declared.filter(|k| !k.is_knowledge()) {
                    return Err(parse_error(token, offset, format!("knowledge slot in a {k} template")));
                }
            }
            _ => {}
        }
        self.flush();
        self.segments.push(slot);
        Ok(())
    }

    fn soft(&mut self, init: Option<String>) -> Segment {
        self.softs += 1;
        Segment::SoftSlot { index: self.softs - 1, init }
    }
}

fn parse_body(body: &str, base: usize, declared: Option<TemplateKind>) -> Result<Vec<Segment>, TemplateError> {
    let mut b = Builder { segments: Vec::new(), literal: String::new(), softs: 0, declared };
    let mut rest = body;
    let mut offset = base;
    while let Some(c) = rest.chars().next() {
        if rest.starts_with("{{") || rest.starts_with("}}") {
            b.literal.push(c);
            rest = &rest[2..];
            offset += 2;
            continue;
        }
        match c {
            '{' => {
                let close = rest.find('}').ok_or_else(|| parse_error(rest, offset, "unclosed `{`"))?;
                let token = &rest[..=close];
                let inner = &token[1..token.len() - 1];
                match inner {
                    "X" => b.push_slot(Segment::InputSlot, token, offset)?,
                    "MASK" => b.push_slot(Segment::MaskSlot, token, offset)?,
                    "SOFT" => {
                        let s = b.soft(None);
                        b.push_slot(s, token, offset)?
                    }
                    _ if inner.starts_with("SOFT*") => {
                        let n: usize = inner["SOFT*".len()..]
                            .parse()
                            .ok()
                            .filter(|&n| n > 0)
                            .ok_or_else(|| parse_error(token, offset, "soft count must be a positive integer"))?;
                        for _ in 0..n {
                            let s = b.soft(None);
                            b.push_slot(s, token, offset)?;
                        }
                    }
                    _ if inner.starts_with("SOFT:") => {
                        let word = inner["SOFT:".len()..]
                            .strip_prefix('"')
                            .and_then(|w| w.strip_suffix('"'))
                            .filter(|w| !w.is_empty())
                            .ok_or_else(|| parse_error(token, offset, "init word must be a non-empty quoted string"))?;
                        let s = b.soft(Some(word.to_string()));
                        b.push_slot(s, token, offset)?
                    }
                    _ if inner.starts_with("K:") => {
                        let kind: KnowledgeKind =
                            inner[2..].parse().map_err(|e| parse_error(token, offset, format!("{e}")))?;
                        b.push_slot(Segment::KnowledgeSlot { kind }, token, offset)?
                    }
                    _ => return Err(parse_error(token, offset, "unknown slot")),
                }
                rest = &rest[token.len()..];
                offset += token.len();
            }
            '}' => return Err(parse_error("}", offset, "unmatched `}`; write `}}` for a literal brace")),
            _ => {
                b.literal.push(c);
                rest = &rest[c.len_utf8()..];
                offset += c.len_utf8();
            }
        }
    }
    b.flush();
    let end = base + body.len();
    for (name, slot) in [("{X}", Segment::InputSlot), ("{MASK}", Segment::MaskSlot)] {
        if !b.segments.contains(&slot) {
            return Err(parse_error(name, end, format!("missing {name}")));
        }
    }
    Ok(b.segments)
}

/// DSL text that parses back to the same segments.
pub fn to_dsl(template: &PromptTemplate) -> String {
    let mut out = String::new();
    let mut prev_slot = false;
    let segs = &template.segments;
    let mut i = 0;
    while i < segs.len() {
        let is_slot = !matches!(segs[i], Segment::Literal { .. });
        if is_slot && prev_slot {
            out.push(' ');
        }
        match &segs[i] {
            Segment::Literal { text } => out.push_str(&text.replace('{', "{{").replace('}', "}}")),
            Segment::InputSlot => out.push_str("{X}"),
            Segment::MaskSlot => out.push_str("{MASK}"),
            Segment::KnowledgeSlot { kind } => {
                out.push_str("{K:");
                out.push_str(kind.name());
                out.push('}');
            }
            Segment::SoftSlot { init: Some(word), .. } => {
                out.push_str("{SOFT:\"");
                out.push_str(word);
                out.push_str("\"}");
            }
            Segment::SoftSlot { init: None, .. } => {
                let run = segs[i..].iter().take_while(|s| matches!(s, Segment::SoftSlot { init: None, .. })).count();
                if run == 1 {
                    out.push_str("{SOFT}");
                } else {
                    out.push_str(&format!("{{SOFT*{run}}}"));
                }
                i += run;
                prev_slot = true;
                continue;
            }
        }
        prev_slot = is_slot;
        i += 1;
    }
    out
}

/// Header line plus DSL line.
pub fn to_file(template: &PromptTemplate) -> String {
    format!(
        "#kind={} style={} id={}\n{}\n",
        template.kind,
        template.model_style,
        template.id,
        to_dsl(template)
    )
}
