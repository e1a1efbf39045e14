//! Full-fidelity (System)Verilog lexer.
//!
//! Every byte of the input ends up in exactly one token, so concatenating the
//! lexemes gives back the source. The lexer never fails: unterminated
//! comments and strings run to end of input and anything unrecognised becomes
//! a one-character punctuation token. Newlines are always their own
//! whitespace token, which keeps line-oriented consumers simple.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Keyword,
    Identifier,
    Number,
    StringLiteral,
    Operator,
    Punctuation,
    Directive,
    Comment,
    Whitespace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HdlToken {
    pub kind: TokenKind,
    pub lexeme: String,
    /// 1-based.
    pub line: u32,
    /// 1-based, counted in characters.
    pub column: u32,
}

impl HdlToken {
    pub fn is_trivia(&self) -> bool {
        matches!(self.kind, TokenKind::Whitespace | TokenKind::Comment)
    }

    pub fn is_newline(&self) -> bool {
        self.kind == TokenKind::Whitespace && self.lexeme.ends_with('\n')
    }
}

const KEYWORDS: &[&str] = &[
    "accept_on", "alias", "always", "always_comb", "always_ff", "always_latch", "and", "assert",
    "assign", "assume", "automatic", "before", "begin", "bind", "bins", "binsof", "bit", "break",
    "buf", "bufif0", "bufif1", "byte", "case", "casex", "casez", "cell", "chandle", "checker",
    "class", "clocking", "cmos", "config", "const", "constraint", "context", "continue", "cover",
    "covergroup", "coverpoint", "cross", "deassign", "default", "defparam", "design", "disable",
    "dist", "do", "edge", "else", "end", "endcase", "endchecker", "endclass", "endclocking",
    "endconfig", "endfunction", "endgenerate", "endgroup", "endinterface", "endmodule",
    "endpackage", "endprimitive", "endprogram", "endproperty", "endsequence", "endspecify",
    "endtable", "endtask", "enum", "event", "eventually", "expect", "export", "extends", "extern",
    "final", "first_match", "for", "force", "foreach", "forever", "fork", "forkjoin", "function",
    "generate", "genvar", "global", "highz0", "highz1", "if", "iff", "ifnone", "ignore_bins",
    "illegal_bins", "implements", "implies", "import", "incdir", "include", "initial", "inout",
    "input", "inside", "instance", "int", "integer", "interconnect", "interface", "intersect",
    "join", "join_any", "join_none", "large", "let", "liblist", "library", "local", "localparam",
    "logic", "longint", "macromodule", "matches", "medium", "modport", "module", "nand",
    "negedge", "nettype", "new", "nexttime", "nmos", "nor", "noshowcancelled", "not", "notif0",
    "notif1", "null", "or", "output", "package", "packed", "parameter", "pmos", "posedge",
    "primitive", "priority", "program", "property", "protected", "pull0", "pull1", "pulldown",
    "pullup", "pulsestyle_ondetect", "pulsestyle_onevent", "pure", "rand", "randc", "randcase",
    "randsequence", "rcmos", "real", "realtime", "ref", "reg", "reject_on", "release", "repeat",
    "restrict", "return", "rnmos", "rpmos", "rtran", "rtranif0", "rtranif1", "s_always",
    "s_eventually", "s_nexttime", "s_until", "s_until_with", "scalared", "sequence", "shortint",
    "shortreal", "showcancelled", "signed", "small", "soft", "solve", "specify", "specparam",
    "static", "string", "strong", "strong0", "strong1", "struct", "super", "supply0", "supply1",
    "sync_accept_on", "sync_reject_on", "table", "tagged", "task", "this", "throughout", "time",
    "timeprecision", "timeunit", "tran", "tranif0", "tranif1", "tri", "tri0", "tri1", "triand",
    "trior", "trireg", "type", "typedef", "union", "unique", "unique0", "unsigned", "until",
    "until_with", "untyped", "use", "uwire", "var", "vectored", "virtual", "void", "wait",
    "wait_order", "wand", "weak", "weak0", "weak1", "while", "wildcard", "wire", "with", "within",
    "wor", "xnor", "xor",
];

// Longest first within each leading character is not required: the matcher
// below tries every entry and keeps the longest hit.
const OPERATORS: &[&str] = &[
    "<<<=", ">>>=", "===", "!==", "==?", "!=?", "<<<", ">>>", "<<=", ">>=", "->>", "<->", "|->",
    "|=>", "##", "**", "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "~&", "~|", "~^", "^~",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "++", "--", "->", "::", ":=", ":/", "+:", "-:",
    "+", "-", "*", "/", "%", "=", "<", ">", "!", "~", "&", "|", "^", "?",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.binary_search(&word).is_ok()
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump_while(&mut self, pred: impl Fn(char) -> bool) {
        let len: usize = self.rest().chars().take_while(|&c| pred(c)).map(char::len_utf8).sum();
        self.pos += len;
    }
}

/// Lexes `source` into a lossless token stream.
pub fn lex_hdl(source: &str) -> Vec<HdlToken> {
    let mut cur = Cursor { src: source, pos: 0 };
    let mut tokens = Vec::new();
    let mut line = 1u32;
    let mut column = 1u32;

    while let Some(c) = cur.peek() {
        let start = cur.pos;
        let kind = lex_one(&mut cur, c);
        let lexeme = &source[start..cur.pos];
        tokens.push(HdlToken { kind, lexeme: lexeme.to_string(), line, column });
        for ch in lexeme.chars() {
            if ch == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
    }
    tokens
}

fn lex_one(cur: &mut Cursor<'_>, c: char) -> TokenKind {
    let rest = cur.rest();
    if c == '\n' {
        cur.pos += 1;
        return TokenKind::Whitespace;
    }
    if rest.starts_with("\r\n") {
        cur.pos += 2;
        return TokenKind::Whitespace;
    }
    if c == '\r' {
        cur.pos += 1;
        return TokenKind::Whitespace;
    }
    if c.is_whitespace() {
        cur.bump_while(|ch| ch.is_whitespace() && ch != '\n' && ch != '\r');
        return TokenKind::Whitespace;
    }
    if rest.starts_with("//") {
        let mut end = rest.find('\n').unwrap_or(rest.len());
        if rest[..end].ends_with('\r') {
            end -= 1;
        }
        cur.pos += end;
        return TokenKind::Comment;
    }
    if let Some(body) = rest.strip_prefix("/*") {
        let end = body.find("*/").map(|i| i + 4).unwrap_or(rest.len());
        cur.pos += end;
        return TokenKind::Comment;
    }
    if c == '"' {
        lex_string(cur);
        return TokenKind::StringLiteral;
    }
    if c == '`' {
        cur.pos += 1;
        if cur.peek().is_some_and(is_ident_start) {
            cur.bump_while(is_ident_continue);
            return TokenKind::Directive;
        }
        if cur.peek() == Some('`') {
            cur.pos += 1;
        }
        return TokenKind::Punctuation;
    }
    if c == '\\' {
        // escaped identifier: backslash up to the next whitespace
        if cur.peek_at(1).is_some_and(|n| !n.is_whitespace()) {
            cur.pos += 1;
            cur.bump_while(|ch| !ch.is_whitespace());
            return TokenKind::Identifier;
        }
        cur.pos += 1;
        return TokenKind::Punctuation;
    }
    if is_ident_start(c) {
        cur.bump_while(is_ident_continue);
        let word = &cur.src[cur.pos - (rest.len() - cur.rest().len())..cur.pos];
        return if is_keyword(word) { TokenKind::Keyword } else { TokenKind::Identifier };
    }
    if c.is_ascii_digit() {
        lex_number(cur);
        return TokenKind::Number;
    }
    if c == '\'' {
        if let Some(len) = based_literal_len(rest) {
            cur.pos += len;
            return TokenKind::Number;
        }
        cur.pos += 1;
        return TokenKind::Punctuation;
    }
    if let Some(op) = OPERATORS.iter().filter(|op| rest.starts_with(*op)).max_by_key(|op| op.len()) {
        cur.pos += op.len();
        return TokenKind::Operator;
    }
    cur.pos += c.len_utf8();
    TokenKind::Punctuation
}

fn lex_string(cur: &mut Cursor<'_>) {
    cur.pos += 1;
    let bytes = cur.src.as_bytes();
    while cur.pos < bytes.len() {
        match bytes[cur.pos] {
            b'\\' => {
                cur.pos += 1;
                if let Some(ch) = cur.peek() {
                    cur.pos += ch.len_utf8();
                }
            }
            b'"' => {
                cur.pos += 1;
                return;
            }
            _ => {
                let ch = cur.peek().unwrap_or('\0');
                cur.pos += ch.len_utf8().max(1);
            }
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>) {
    cur.bump_while(|ch| ch.is_ascii_digit() || ch == '_');
    let rest = cur.rest();
    if rest.starts_with('.') && rest[1..].starts_with(|ch: char| ch.is_ascii_digit()) {
        cur.pos += 1;
        cur.bump_while(|ch| ch.is_ascii_digit() || ch == '_');
    }
    let rest = cur.rest();
    if rest.starts_with(['e', 'E']) {
        let after = &rest[1..];
        let sign = usize::from(after.starts_with(['+', '-']));
        if after[sign..].starts_with(|ch: char| ch.is_ascii_digit()) {
            cur.pos += 1 + sign;
            cur.bump_while(|ch| ch.is_ascii_digit() || ch == '_');
        }
    }
    if let Some(len) = based_literal_len(cur.rest()) {
        cur.pos += len;
    }
}

/// Length of a `'[s]b0101`-style suffix (or `'0`/`'1`/`'x`/`'z`) at the start
/// of `rest`, if there is one.
fn based_literal_len(rest: &str) -> Option<usize> {
    let b = rest.as_bytes();
    if b.first() != Some(&b'\'') {
        return None;
    }
    let mut i = 1;
    if matches!(b.get(i), Some(b's' | b'S')) {
        i += 1;
    }
    match b.get(i) {
        Some(b'b' | b'B' | b'o' | b'O' | b'd' | b'D' | b'h' | b'H') => {
            i += 1;
            let digits = b[i..]
                .iter()
                .take_while(|ch| ch.is_ascii_hexdigit() || matches!(ch, b'x' | b'X' | b'z' | b'Z' | b'?' | b'_'))
                .count();
            if digits == 0 {
                return None;
            }
            Some(i + digits)
        }
        Some(b'0' | b'1' | b'x' | b'X' | b'z' | b'Z') if i == 1 => {
            let next = b.get(2).copied();
            if next.is_some_and(|n| n.is_ascii_alphanumeric() || n == b'_') {
                None
            } else {
                Some(2)
            }
        }
        _ => None,
    }
}
