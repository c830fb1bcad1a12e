//! N-Triples reading and writing.
//!
//! Relation names are short prefixed names inside the store (`hasColumn`,
//! `rdf:type`); on disk they are expanded to full IRIs. Output lines are sorted
//! bytewise so a graph always serializes to the same text.

use super::{KgError, KnowledgeGraph, Literal, LiteralKind, Object};

pub const VOCAB_NS: &str = "urn:rddl:vocab#";

const PREFIXES: &[(&str, &str)] = &[
    ("rdf:", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"),
    ("rdfs:", "http://www.w3.org/2000/01/rdf-schema#"),
    ("owl:", "http://www.w3.org/2002/07/owl#"),
    ("prov:", "http://www.w3.org/ns/prov#"),
    ("xsd:", "http://www.w3.org/2001/XMLSchema#"),
];

pub fn relation_iri(name: &str) -> String {
    for (prefix, ns) in PREFIXES {
        if let Some(local) = name.strip_prefix(prefix) {
            return format!("{ns}{local}");
        }
    }
    format!("{VOCAB_NS}{name}")
}

pub fn relation_name(iri: &str) -> String {
    if let Some(local) = iri.strip_prefix(VOCAB_NS) {
        return local.to_string();
    }
    for (prefix, ns) in PREFIXES {
        if let Some(local) = iri.strip_prefix(ns) {
            return format!("{prefix}{local}");
        }
    }
    iri.to_string()
}

fn write_iri(out: &mut String, iri: &str) {
    out.push('<');
    for c in iri.chars() {
        match c {
            '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' | ' ' => {
                out.push_str(&format!("\\u{:04X}", c as u32))
            }
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04X}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('>');
}

fn write_literal(out: &mut String, lit: &Literal) {
    out.push('"');
    for c in lit.lexical().chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    if lit.kind() != LiteralKind::String {
        out.push_str("^^");
        write_iri(out, lit.kind().xsd_iri());
    }
}

/// One line per triple, sorted, each terminated by `" .\n"`.
pub fn serialize_ntriples(g: &KnowledgeGraph) -> String {
    let rel_iris: Vec<String> = g.relation_names().iter().map(|n| relation_iri(n)).collect();
    let mut lines: Vec<String> = g
        .triples()
        .map(|t| {
            let mut line = String::new();
            write_iri(&mut line, g.node_iri(t.subject));
            line.push(' ');
            write_iri(&mut line, &rel_iris[t.relation.index()]);
            line.push(' ');
            match &t.object {
                Object::Node(o) => write_iri(&mut line, g.node_iri(*o)),
                Object::Literal(l) => write_literal(&mut line, l),
            }
            line.push_str(" .");
            line
        })
        .collect();
    lines.sort_unstable();
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

pub fn parse_ntriples(text: &str) -> Result<KnowledgeGraph, KgError> {
    parse_into(KnowledgeGraph::new(), text)
}

/// Parses into a graph whose relation registry starts with `relations`, so
/// graphs parsed from different files share relation ids.
pub fn parse_ntriples_with_relations<S: AsRef<str>>(
    text: &str,
    relations: &[S],
) -> Result<KnowledgeGraph, KgError> {
    parse_into(KnowledgeGraph::with_relations(relations), text)
}

fn parse_into(mut g: KnowledgeGraph, text: &str) -> Result<KnowledgeGraph, KgError> {
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| KgError::Parse {
            line: line_no,
            msg: msg.to_string(),
        };
        let mut cur = Cursor { s: line, pos: 0 };
        let subject = cur.iri().map_err(|m| err(&m))?;
        cur.skip_ws();
        let relation = cur.iri().map_err(|m| err(&m))?;
        cur.skip_ws();
        let object = if cur.peek() == Some('"') {
            Object::Literal(cur.literal().map_err(|m| err(&m))?)
        } else {
            let iri = cur.iri().map_err(|m| err(&m))?;
            Object::Node(g.intern_node(&iri))
        };
        cur.skip_ws();
        if cur.peek() != Some('.') {
            return Err(err("expected terminating '.'"));
        }
        cur.pos += 1;
        cur.skip_ws();
        if cur.pos != cur.s.len() && cur.peek() != Some('#') {
            return Err(err("trailing characters after '.'"));
        }
        let s = g.intern_node(&subject);
        let r = g.intern_relation(&relation_name(&relation));
        g.add_triple(s, r, object)
            .map_err(|e| err(&e.to_string()))?;
    }
    Ok(g)
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ') | Some('\t')) {
            self.pos += 1;
        }
    }

    fn uchar(&mut self, len: usize) -> Result<char, String> {
        let end = self.pos + len;
        let hex = self.s.get(self.pos..end).ok_or("truncated \\u escape")?;
        let code = u32::from_str_radix(hex, 16).map_err(|_| "bad \\u escape")?;
        self.pos = end;
        char::from_u32(code).ok_or_else(|| "invalid code point".to_string())
    }

    fn iri(&mut self) -> Result<String, String> {
        if self.bump() != Some('<') {
            return Err("expected '<'".into());
        }
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated IRI".into()),
                Some('>') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('u') => out.push(self.uchar(4)?),
                    Some('U') => out.push(self.uchar(8)?),
                    _ => return Err("bad escape in IRI".into()),
                },
                Some(' ') => return Err("space in IRI".into()),
                Some(c) => out.push(c),
            }
        }
    }

    fn literal(&mut self) -> Result<Literal, String> {
        self.bump();
        let mut lex = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated literal".into()),
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('"') => lex.push('"'),
                    Some('\\') => lex.push('\\'),
                    Some('n') => lex.push('\n'),
                    Some('r') => lex.push('\r'),
                    Some('t') => lex.push('\t'),
                    Some('u') => lex.push(self.uchar(4)?),
                    Some('U') => lex.push(self.uchar(8)?),
                    _ => return Err("bad escape in literal".into()),
                },
                Some(c) => lex.push(c),
            }
        }
        let kind = if self.s[self.pos..].starts_with("^^") {
            self.pos += 2;
            let dt = self.iri()?;
            LiteralKind::from_xsd_iri(&dt).ok_or_else(|| format!("unsupported datatype {dt}"))?
        } else if self.peek() == Some('@') {
            return Err("language-tagged literals are not supported".into());
        } else {
            LiteralKind::String
        };
        Literal::new(kind, &lex).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_roundtrip() {
        assert_eq!(serialize_ntriples(&KnowledgeGraph::new()), "");
        assert!(parse_ntriples("").unwrap().is_empty());
    }

    #[test]
    fn single_line_format() {
        let mut g = KnowledgeGraph::new();
        g.add("urn:a", "hasColumn", "urn:b");
        let text = serialize_ntriples(&g);
        assert_eq!(text, "<urn:a> <urn:rddl:vocab#hasColumn> <urn:b> .\n");
        assert_eq!(text.lines().count(), 1);
        assert!(text.lines().all(|l| l.ends_with(" .")));
    }

    #[test]
    fn missing_dot_reports_line() {
        let text = "<urn:a> <urn:p> <urn:b> .\n<urn:a> <urn:p> <urn:c>\n";
        match parse_ntriples(text) {
            Err(KgError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_lines_collapse() {
        let text = "<urn:a> <urn:p> <urn:b> .\n<urn:a> <urn:p> <urn:b> .\n";
        assert_eq!(parse_ntriples(text).unwrap().len(), 1);
    }

    #[test]
    fn literal_escapes_and_types_survive() {
        let mut g = KnowledgeGraph::new();
        g.add_literal("urn:x", "exactValue", Literal::string("say \"hi\"\n\\ok"));
        g.add_literal("urn:x", "isNullable", Literal::boolean(true));
        g.add_literal("urn:x", "datatypeLength", Literal::integer(40));
        g.add_literal("urn:x", "exactValue", Literal::decimal(2.5).unwrap());
        g.add("urn:odd iri>", "rdf:type", "urn:c");
        let text = serialize_ntriples(&g);
        assert!(text.contains("<http://www.w3.org/1999/02/22-rdf-syntax-ns#type>"));
        let back = parse_ntriples(&text).unwrap();
        assert_eq!(back.len(), g.len());
        assert_eq!(serialize_ntriples(&back), text);
        assert!(back.node_id("urn:odd iri>").is_some());
        assert!(back.relation_id("rdf:type").is_some());
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_ntriples("<urn:a> <urn:p> \"x\"^^<urn:weird> .").is_err());
        assert!(parse_ntriples("<urn:a> <urn:p> <urn:b> . extra").is_err());
        assert!(parse_ntriples("urn:a <urn:p> <urn:b> .").is_err());
    }
}
