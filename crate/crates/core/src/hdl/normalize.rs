use super::lexer::{lex_hdl, TokenKind};

/// Removes comments and indentation from HDL source.
///
/// Comment tokens are dropped (a block comment sitting between two
/// non-blank characters leaves one space so the neighbours do not fuse).
/// Each line then loses its leading and trailing whitespace, blank-line runs
/// collapse to a single blank line, and leading/trailing blank lines go away.
/// Lines are joined with `\n` with no final newline. The result is a fixed
/// point of this function and never longer than the input.
pub fn strip_comments_and_indent(source: &str) -> String {
    let tokens = lex_hdl(source);
    let mut text = String::with_capacity(source.len());
    for (i, tok) in tokens.iter().enumerate() {
        if tok.kind != TokenKind::Comment {
            text.push_str(&tok.lexeme);
            continue;
        }
        let prev_solid = text.chars().last().is_some_and(|c| !c.is_whitespace());
        let next_solid = tokens
            .get(i + 1)
            .and_then(|t| t.lexeme.chars().next())
            .is_some_and(|c| !c.is_whitespace());
        if prev_solid && next_solid {
            text.push(' ');
        }
    }

    let mut out: Vec<&str> = Vec::new();
    let mut pending_blank = false;
    for line in text.split('\n') {
        let line = line.trim();
        if line.is_empty() {
            pending_blank = !out.is_empty();
            continue;
        }
        if pending_blank {
            out.push("");
            pending_blank = false;
        }
        out.push(line);
    }
    out.join("\n")
}

/// [`strip_comments_and_indent`] followed by collapsing every whitespace run
/// to one space. Used as the equivalence key for duplicate detection.
pub fn normalize_for_dedup(source: &str) -> String {
    strip_comments_and_indent(source).split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_trailing_comment_and_indent() {
        assert_eq!(strip_comments_and_indent("  ctx = 0; // init"), "ctx = 0;");
    }

    #[test]
    fn idempotent_on_stripped_text() {
        let once = strip_comments_and_indent("module m;\n\n\n  wire a; /* x */\nendmodule\n");
        assert_eq!(once, "module m;\n\nwire a;\nendmodule");
        assert_eq!(strip_comments_and_indent(&once), once);
    }

    #[test]
    fn comments_only_becomes_empty() {
        assert_eq!(strip_comments_and_indent("// a\n/* b\n c */\n   // d\n"), "");
    }

    #[test]
    fn comment_markers_inside_strings_survive() {
        assert_eq!(
            strip_comments_and_indent("  $display(\"// not a comment\"); // real"),
            "$display(\"// not a comment\");"
        );
    }

    #[test]
    fn inline_block_comment_keeps_tokens_apart() {
        assert_eq!(strip_comments_and_indent("wire/*c*/x;"), "wire x;");
        assert_eq!(strip_comments_and_indent("a /*c*/ b"), "a  b");
    }

    #[test]
    fn dedup_key_ignores_layout() {
        assert_eq!(
            normalize_for_dedup("if (a)\n    b = 1;  // x"),
            normalize_for_dedup("if (a)\n  b = 1;")
        );
    }
}
