//! A small (System)Verilog preprocessor.
//!
//! Supports object-like and function-like `` `define``, `` `undef``,
//! `` `ifdef``/`` `ifndef``/`` `elsif``/`` `else``/`` `endif`` and
//! `` `include``. Any other compiler directive (`` `timescale``,
//! `` `default_nettype`` ...) is dropped together with its arguments up to
//! end of line. Lines that only held directives disappear entirely; every
//! other line keeps its layout, so a source without directives comes back
//! unchanged.
//!
//! Optionally the whole job can be handed to an external `verilator -E`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

use thiserror::Error;

use super::lexer::{lex_hdl, HdlToken, TokenKind};

pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PreprocessError {
    #[error("include file not found: {0}")]
    IncludeNotFound(String),
    #[error("macro or include nesting deeper than {MAX_DEPTH} while expanding `{0}`")]
    RecursionLimit(String),
    #[error("external preprocessor failed: {0}")]
    ExternalToolError(String),
}

/// Resolves `` `include`` names to file contents.
pub trait IncludeResolver {
    fn resolve(&self, name: &str) -> Option<String>;
}

/// Resolver that never finds anything.
pub struct NoIncludes;

impl IncludeResolver for NoIncludes {
    fn resolve(&self, _name: &str) -> Option<String> {
        None
    }
}

impl IncludeResolver for HashMap<String, String> {
    fn resolve(&self, name: &str) -> Option<String> {
        self.get(name).cloned()
    }
}

impl IncludeResolver for BTreeMap<String, String> {
    fn resolve(&self, name: &str) -> Option<String> {
        self.get(name).cloned()
    }
}

/// Looks includes up relative to a list of directories.
pub struct DirResolver(pub Vec<PathBuf>);

impl IncludeResolver for DirResolver {
    fn resolve(&self, name: &str) -> Option<String> {
        self.0.iter().find_map(|dir| std::fs::read_to_string(dir.join(name)).ok())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Macro {
    params: Option<Vec<String>>,
    body: String,
}

/// `verilator -E` settings for the external path.
#[derive(Debug, Clone)]
pub struct ExternalPreprocessor {
    pub binary: PathBuf,
    pub include_dirs: Vec<PathBuf>,
}

impl ExternalPreprocessor {
    pub fn run(&self, source: &str, defines: &BTreeMap<String, String>) -> Result<String, PreprocessError> {
        let ext_err = |e: std::io::Error| PreprocessError::ExternalToolError(e.to_string());
        let mut file = tempfile::Builder::new().suffix(".sv").tempfile().map_err(ext_err)?;
        file.write_all(source.as_bytes()).map_err(ext_err)?;
        file.flush().map_err(ext_err)?;

        let mut cmd = Command::new(&self.binary);
        cmd.arg("-E");
        for (name, value) in defines {
            if value.is_empty() {
                cmd.arg(format!("-D{name}"));
            } else {
                cmd.arg(format!("-D{name}={value}"));
            }
        }
        for dir in &self.include_dirs {
            cmd.arg(format!("-I{}", dir.display()));
        }
        cmd.arg(file.path());
        let out = cmd.output().map_err(ext_err)?;
        if !out.status.success() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            return Err(PreprocessError::ExternalToolError(format!(
                "{} exited with {}: {}",
                self.binary.display(),
                out.status,
                stderr.trim()
            )));
        }
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    }
}

/// Preprocesses `source` with the built-in implementation, or with the
/// external tool when one is given.
pub fn preprocess(
    source: &str,
    defines: &BTreeMap<String, String>,
    includes: &dyn IncludeResolver,
    external: Option<&ExternalPreprocessor>,
) -> Result<String, PreprocessError> {
    if let Some(ext) = external {
        return ext.run(source, defines);
    }
    let mut pp = Preprocessor {
        macros: defines
            .iter()
            .map(|(k, v)| (k.clone(), Macro { params: None, body: v.clone() }))
            .collect(),
        includes,
    };
    let mut out = pp.run(source, 0)?;
    if !source.ends_with('\n') && out.ends_with('\n') {
        out.pop();
    }
    Ok(out)
}

struct Preprocessor<'a> {
    macros: HashMap<String, Macro>,
    includes: &'a dyn IncludeResolver,
}

#[derive(Clone, Copy)]
struct Cond {
    /// Whether the enclosing region is live.
    parent_active: bool,
    /// Whether some branch of this conditional has already been taken.
    taken: bool,
    active: bool,
}

/// Accumulates output text line by line, dropping lines that held nothing
/// but directives.
#[derive(Default)]
struct LineSink {
    out: String,
    line: String,
    had_directive: bool,
}

impl LineSink {
    fn push(&mut self, text: &str) {
        for piece in text.split_inclusive('\n') {
            self.line.push_str(piece);
            if piece.ends_with('\n') {
                self.flush();
            }
        }
    }

    fn flush(&mut self) {
        let drop = self.had_directive && self.line.trim().is_empty();
        if !drop {
            self.out.push_str(&self.line);
        }
        self.line.clear();
        self.had_directive = false;
    }

    fn finish(mut self) -> String {
        if !self.line.is_empty() || self.had_directive {
            self.flush();
        }
        self.out
    }
}

fn is_conditional(name: &str) -> bool {
    matches!(name, "`ifdef" | "`ifndef" | "`elsif" | "`else" | "`endif")
}

impl Preprocessor<'_> {
    fn run(&mut self, source: &str, depth: usize) -> Result<String, PreprocessError> {
        let tokens = lex_hdl(source);
        let mut sink = LineSink::default();
        let mut conds: Vec<Cond> = Vec::new();
        let mut i = 0;

        while i < tokens.len() {
            let tok = &tokens[i];
            let active = conds.last().is_none_or(|c| c.active);

            if tok.kind == TokenKind::Directive && is_conditional(&tok.lexeme) {
                sink.had_directive = true;
                let (name, next) = if tok.lexeme == "`ifdef" || tok.lexeme == "`ifndef" || tok.lexeme == "`elsif" {
                    let (name, next) = directive_word(&tokens, i + 1);
                    (Some(name), next)
                } else {
                    (None, i + 1)
                };
                let defined = name.as_ref().is_some_and(|n| self.macros.contains_key(n));
                match tok.lexeme.as_str() {
                    "`ifdef" | "`ifndef" => {
                        let want = if tok.lexeme == "`ifdef" { defined } else { !defined };
                        let on = active && want;
                        conds.push(Cond { parent_active: active, taken: on, active: on });
                    }
                    "`elsif" => {
                        if let Some(c) = conds.last_mut() {
                            let on = c.parent_active && !c.taken && defined;
                            c.taken |= on;
                            c.active = on;
                        }
                    }
                    "`else" => {
                        if let Some(c) = conds.last_mut() {
                            let on = c.parent_active && !c.taken;
                            c.taken |= on;
                            c.active = on;
                        }
                    }
                    _ => {
                        conds.pop();
                    }
                }
                i = next;
                continue;
            }

            if !active {
                // keep line structure so directive-only lines are recognised
                if tok.is_newline() {
                    sink.had_directive = true;
                    sink.flush();
                }
                i += 1;
                continue;
            }

            if tok.kind != TokenKind::Directive {
                sink.push(&tok.lexeme);
                i += 1;
                continue;
            }

            match tok.lexeme.as_str() {
                "`define" => {
                    sink.had_directive = true;
                    i = self.parse_define(&tokens, i + 1);
                }
                "`undef" => {
                    sink.had_directive = true;
                    let (name, next) = directive_word(&tokens, i + 1);
                    self.macros.remove(&name);
                    i = next;
                }
                "`include" => {
                    sink.had_directive = true;
                    let (name, next) = include_name(&tokens, i + 1);
                    if depth >= MAX_DEPTH {
                        return Err(PreprocessError::RecursionLimit(name));
                    }
                    let body = self
                        .includes
                        .resolve(&name)
                        .ok_or_else(|| PreprocessError::IncludeNotFound(name.clone()))?;
                    let mut expanded = self.run(&body, depth + 1)?;
                    if expanded.ends_with('\n') {
                        expanded.pop();
                    }
                    sink.push(&expanded);
                    i = next;
                }
                name => {
                    let key = &name[1..];
                    if let Some(m) = self.macros.get(key).cloned() {
                        let (text, next) = self.expand_use(key, &m, &tokens, i + 1, depth)?;
                        sink.push(&text);
                        i = next;
                    } else {
                        // unknown compiler directive: drop it and its arguments
                        sink.had_directive = true;
                        i = skip_to_eol(&tokens, i + 1);
                    }
                }
            }
        }
        Ok(sink.finish())
    }

    /// Parses the remainder of a `` `define`` starting after the directive
    /// token. Returns the index of the terminating newline token.
    fn parse_define(&mut self, tokens: &[HdlToken], mut i: usize) -> usize {
        i = skip_blanks(tokens, i);
        let Some(name_tok) = tokens.get(i) else { return i };
        if tokens[i].is_newline() {
            return i;
        }
        let name = name_tok.lexeme.clone();
        i += 1;

        // a parameter list must follow the name without whitespace
        let mut params = None;
        if tokens.get(i).is_some_and(|t| t.lexeme == "(") {
            let mut list = Vec::new();
            i += 1;
            while let Some(t) = tokens.get(i) {
                i += 1;
                match t.lexeme.as_str() {
                    ")" => break,
                    "," => {}
                    _ if t.kind == TokenKind::Identifier => list.push(t.lexeme.clone()),
                    _ => {}
                }
            }
            params = Some(list);
        }

        let mut body = String::new();
        while let Some(t) = tokens.get(i) {
            if t.is_newline() {
                if body.ends_with('\\') {
                    body.pop();
                    body.push(' ');
                    i += 1;
                    continue;
                }
                break;
            }
            if !(t.kind == TokenKind::Comment && t.lexeme.starts_with("//")) {
                body.push_str(&t.lexeme);
            }
            i += 1;
        }
        self.macros.insert(name, Macro { params, body: body.trim().to_string() });
        i
    }

    fn expand_use(
        &mut self,
        name: &str,
        m: &Macro,
        tokens: &[HdlToken],
        mut i: usize,
        depth: usize,
    ) -> Result<(String, usize), PreprocessError> {
        if depth >= MAX_DEPTH {
            return Err(PreprocessError::RecursionLimit(name.to_string()));
        }
        let body = match &m.params {
            None => m.body.clone(),
            Some(params) => {
                let args = if tokens.get(i).is_some_and(|t| t.lexeme == "(") {
                    let (args, next) = collect_args(tokens, i + 1);
                    i = next;
                    args
                } else {
                    Vec::new()
                };
                substitute(&m.body, params, &args)
            }
        };
        let mut expanded = self.run(&body, depth + 1)?;
        if expanded.ends_with('\n') && !body.ends_with('\n') {
            expanded.pop();
        }
        Ok((expanded, i))
    }
}

fn skip_blanks(tokens: &[HdlToken], mut i: usize) -> usize {
    while tokens.get(i).is_some_and(|t| t.kind == TokenKind::Whitespace && !t.is_newline()) {
        i += 1;
    }
    i
}

fn skip_to_eol(tokens: &[HdlToken], mut i: usize) -> usize {
    while tokens.get(i).is_some_and(|t| !t.is_newline()) {
        i += 1;
    }
    i
}

/// Reads the identifier argument of `` `ifdef``-like directives.
fn directive_word(tokens: &[HdlToken], i: usize) -> (String, usize) {
    let i = skip_blanks(tokens, i);
    match tokens.get(i) {
        Some(t) if !t.is_newline() && t.kind != TokenKind::Comment => (t.lexeme.clone(), i + 1),
        _ => (String::new(), i),
    }
}

fn include_name(tokens: &[HdlToken], i: usize) -> (String, usize) {
    let i = skip_blanks(tokens, i);
    match tokens.get(i) {
        Some(t) if t.kind == TokenKind::StringLiteral => {
            (t.lexeme.trim_matches('"').to_string(), skip_to_eol(tokens, i + 1))
        }
        Some(t) if t.lexeme == "<" => {
            let mut name = String::new();
            let mut j = i + 1;
            while let Some(t) = tokens.get(j) {
                j += 1;
                if t.lexeme == ">" || t.is_newline() {
                    break;
                }
                name.push_str(&t.lexeme);
            }
            (name, skip_to_eol(tokens, j))
        }
        _ => (String::new(), skip_to_eol(tokens, i)),
    }
}

/// Collects comma-separated macro arguments up to the matching `)`.
fn collect_args(tokens: &[HdlToken], mut i: usize) -> (Vec<String>, usize) {
    let mut args = vec![String::new()];
    let mut depth = 0usize;
    while let Some(t) = tokens.get(i) {
        i += 1;
        match t.lexeme.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" if depth == 0 => break,
            ")" | "]" | "}" => depth = depth.saturating_sub(1),
            "," if depth == 0 => {
                args.push(String::new());
                continue;
            }
            _ => {}
        }
        if let Some(last) = args.last_mut() {
            last.push_str(&t.lexeme);
        }
    }
    let args = args.into_iter().map(|a| a.trim().to_string()).collect();
    (args, i)
}

fn substitute(body: &str, params: &[String], args: &[String]) -> String {
    lex_hdl(body)
        .into_iter()
        .map(|t| {
            if t.kind == TokenKind::Identifier {
                if let Some(pos) = params.iter().position(|p| *p == t.lexeme) {
                    return args.get(pos).cloned().unwrap_or_default();
                }
            }
            t.lexeme
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(src: &str) -> Result<String, PreprocessError> {
        preprocess(src, &BTreeMap::new(), &NoIncludes, None)
    }

    #[test]
    fn object_macro() {
        assert_eq!(pp("`define W 8\nwire [`W-1:0] d;").unwrap(), "wire [8-1:0] d;");
    }

    #[test]
    fn no_directives_is_identity() {
        let src = "module m;\n  // c\n  wire a;\n\nendmodule\n";
        assert_eq!(pp(src).unwrap(), src);
    }

    #[test]
    fn ifdef_else_with_undefined_symbol() {
        assert_eq!(pp("`ifdef X\na\n`else\nb\n`endif").unwrap(), "b");
        assert_eq!(pp("`ifdef X\na\n`else\nb\n`endif\n").unwrap(), "b\n");
    }

    #[test]
    fn predefined_symbols_and_elsif() {
        let mut defs = BTreeMap::new();
        defs.insert("Y".to_string(), String::new());
        let src = "`ifdef X\nx\n`elsif Y\ny\n`else\nz\n`endif\n";
        assert_eq!(preprocess(src, &defs, &NoIncludes, None).unwrap(), "y\n");
        assert_eq!(pp("`ifndef X\nn\n`endif\n").unwrap(), "n\n");
    }

    #[test]
    fn nested_conditionals_in_dead_branch() {
        let src = "`ifdef A\n`ifdef B\nab\n`else\nanb\n`endif\n`else\nna\n`endif\n";
        assert_eq!(pp(src).unwrap(), "na\n");
    }

    #[test]
    fn function_like_macro() {
        let src = "`define MAX(a, b) ((a) > (b) ? (a) : (b))\nassign m = `MAX(x, y+1);\n";
        assert_eq!(pp(src).unwrap(), "assign m = ((x) > (y+1) ? (x) : (y+1));\n");
    }

    #[test]
    fn nested_macro_and_continuation() {
        let src = "`define A 1\n`define B (`A + \\\n 2)\nx = `B;\n";
        assert_eq!(pp(src).unwrap(), "x = (1 +   2);\n");
    }

    #[test]
    fn include_splices_and_reports_missing() {
        let mut inc = HashMap::new();
        inc.insert("defs.vh".to_string(), "`define N 4\nlocalparam K = `N;\n".to_string());
        let out = preprocess("`include \"defs.vh\"\nwire [`N:0] w;\n", &BTreeMap::new(), &inc, None).unwrap();
        assert_eq!(out, "localparam K = 4;\nwire [4:0] w;\n");
        assert_eq!(
            pp("`include \"missing.vh\"\n"),
            Err(PreprocessError::IncludeNotFound("missing.vh".into()))
        );
    }

    #[test]
    fn other_directives_are_stripped() {
        assert_eq!(pp("`timescale 1ns/1ps\nmodule m;\nendmodule\n").unwrap(), "module m;\nendmodule\n");
    }

    #[test]
    fn self_referential_macro_hits_limit() {
        let err = pp("`define LOOP `LOOP\nx = `LOOP;\n").unwrap_err();
        assert_eq!(err, PreprocessError::RecursionLimit("LOOP".into()));
        let mut inc = HashMap::new();
        inc.insert("self.vh".to_string(), "`include \"self.vh\"\n".to_string());
        let err = preprocess("`include \"self.vh\"\n", &BTreeMap::new(), &inc, None).unwrap_err();
        assert!(matches!(err, PreprocessError::RecursionLimit(_)));
    }

    #[test]
    fn macro_in_comment_or_string_untouched() {
        let src = "`define W 8\n// `W\n$display(\"`W\");\n";
        assert_eq!(pp(src).unwrap(), "// `W\n$display(\"`W\");\n");
    }

    #[cfg(unix)]
    #[test]
    fn external_tool_stdout_and_failure() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let ok = dir.path().join("fake-ok");
        std::fs::write(&ok, "#!/bin/sh\necho preprocessed\n").unwrap();
        std::fs::set_permissions(&ok, std::fs::Permissions::from_mode(0o755)).unwrap();
        let bad = dir.path().join("fake-bad");
        std::fs::write(&bad, "#!/bin/sh\necho boom >&2\nexit 3\n").unwrap();
        std::fs::set_permissions(&bad, std::fs::Permissions::from_mode(0o755)).unwrap();

        let ext = ExternalPreprocessor { binary: ok, include_dirs: vec![] };
        let out = preprocess("wire a;", &BTreeMap::new(), &NoIncludes, Some(&ext)).unwrap();
        assert_eq!(out, "preprocessed\n");

        let ext = ExternalPreprocessor { binary: bad, include_dirs: vec![] };
        let err = preprocess("wire a;", &BTreeMap::new(), &NoIncludes, Some(&ext)).unwrap_err();
        assert!(matches!(err, PreprocessError::ExternalToolError(msg) if msg.contains("boom")));
    }
}
