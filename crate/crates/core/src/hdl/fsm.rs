//! Syntactic finite-state-machine detection.
//!
//! A `case`/`casez`/`casex` inside an `always*` block whose subject is a
//! single identifier is treated as a state machine over that identifier.
//! This is a heuristic over the token stream; it does no elaboration.

use serde::{Deserialize, Serialize};

use super::lexer::{HdlToken, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsmSummary {
    pub state_register: String,
    pub state_labels: Vec<String>,
    pub transition_count: usize,
    /// First and last line of the case statement.
    pub source_span: (u32, u32),
}

const ALWAYS: &[&str] = &["always", "always_comb", "always_ff", "always_latch"];
const CASE: &[&str] = &["case", "casez", "casex"];

pub fn extract_fsm(tokens: &[HdlToken]) -> Vec<FsmSummary> {
    let toks: Vec<&HdlToken> = tokens.iter().filter(|t| !t.is_trivia()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if toks[i].kind == TokenKind::Keyword && ALWAYS.contains(&toks[i].lexeme.as_str()) {
            let end = always_block_end(&toks, i + 1);
            scan_block(&toks[i + 1..end], &mut out);
            i = end;
        } else {
            i += 1;
        }
    }
    out
}

/// Index one past the statement governed by the `always` keyword at `start - 1`.
fn always_block_end(toks: &[&HdlToken], mut i: usize) -> usize {
    // optional event control: @(...), @*, @ident
    if toks.get(i).is_some_and(|t| t.lexeme == "@") {
        i += 1;
        if toks.get(i).is_some_and(|t| t.lexeme == "(") {
            i = matching_close(toks, i);
        } else {
            i += 1;
        }
    }
    statement_end(toks, i)
}

/// Index of the token after the `)` matching the `(` at `open`.
fn matching_close(toks: &[&HdlToken], open: usize) -> usize {
    let mut depth = 0usize;
    for (j, t) in toks.iter().enumerate().skip(open) {
        match t.lexeme.as_str() {
            "(" => depth += 1,
            ")" => {
                depth -= 1;
                if depth == 0 {
                    return j + 1;
                }
            }
            _ => {}
        }
    }
    toks.len()
}

/// Index one past the statement starting at `i`: a `begin ... end` block,
/// a `case ... endcase`, or anything up to the next `;`.
fn statement_end(toks: &[&HdlToken], i: usize) -> usize {
    let Some(first) = toks.get(i) else { return toks.len() };
    let (open, close): (&[&str], &str) = match first.lexeme.as_str() {
        "begin" => (&["begin"], "end"),
        "fork" => (&["fork"], "join"),
        l if CASE.contains(&l) => (CASE, "endcase"),
        _ => {
            return toks[i..]
                .iter()
                .position(|t| t.lexeme == ";")
                .map(|p| i + p + 1)
                .unwrap_or(toks.len());
        }
    };
    let mut depth = 0usize;
    for (j, t) in toks.iter().enumerate().skip(i) {
        let l = t.lexeme.as_str();
        if open.contains(&l) {
            depth += 1;
        } else if l == close {
            depth -= 1;
            if depth == 0 {
                return j + 1;
            }
        }
    }
    toks.len()
}

fn scan_block(block: &[&HdlToken], out: &mut Vec<FsmSummary>) {
    let mut i = 0;
    while i < block.len() {
        if block[i].kind == TokenKind::Keyword && CASE.contains(&block[i].lexeme.as_str()) {
            let end = statement_end(block, i);
            if let Some(summary) = summarize_case(&block[i..end]) {
                out.push(summary);
            }
            i = end.max(i + 1);
        } else {
            i += 1;
        }
    }
}

fn summarize_case(case: &[&HdlToken]) -> Option<FsmSummary> {
    // case ( IDENT ) ...
    if case.len() < 4 || case[1].lexeme != "(" || case[3].lexeme != ")" || case[2].kind != TokenKind::Identifier {
        return None;
    }
    let subject = case[2].lexeme.clone();

    let mut labels: Vec<String> = Vec::new();
    let mut i = 4;
    let body_end = case.len().saturating_sub(1); // the endcase token
    while i < body_end {
        // item labels: expressions separated by ',' up to ':'
        let Some(colon) = (i..body_end).find(|&j| case[j].lexeme == ":" || case[j].lexeme == ";") else {
            break;
        };
        if case[colon].lexeme == ";" {
            // tail of a statement the item scan did not consume (e.g. `else`)
            i = colon + 1;
            continue;
        }
        for t in &case[i..colon] {
            if t.kind == TokenKind::Identifier && !labels.contains(&t.lexeme) {
                labels.push(t.lexeme.clone());
            }
        }
        i = statement_end(case, colon + 1);
    }
    if labels.is_empty() {
        return None;
    }

    Some(FsmSummary {
        state_register: subject,
        transition_count: count_transitions(case, &labels),
        state_labels: labels,
        source_span: (case[0].line, case[case.len() - 1].line),
    })
}

/// Statements `x = LABEL;` or `x <= LABEL;` inside the case body. Counting by
/// right-hand side covers both one-block machines (`state <= RUN`) and the
/// two-block style where the case assigns a separate next-state signal.
fn count_transitions(case: &[&HdlToken], labels: &[String]) -> usize {
    (1..case.len().saturating_sub(3))
        .filter(|&j| {
            case[j].kind == TokenKind::Identifier
                && matches!(case[j + 1].lexeme.as_str(), "=" | "<=")
                && labels.contains(&case[j + 2].lexeme)
                && case[j + 3].lexeme == ";"
                && matches!(case[j - 1].lexeme.as_str(), ";" | "begin" | "end" | ":" | ")" | "else" | "default")
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::lexer::lex_hdl;

    pub(crate) const MOORE: &str = "\
module ctrl (input logic clk, input logic go, input logic fin, output logic busy);
  typedef enum logic [1:0] {IDLE, RUN, DONE} state_t;
  state_t state;
  always_ff @(posedge clk) begin
    case (state)
      IDLE: if (go) state <= RUN;
      RUN: begin
        if (fin) state <= DONE;
        else state <= RUN;
      end
      DONE: state <= IDLE;
      default: ;
    endcase
  end
  assign busy = (state == RUN);
endmodule
";

    #[test]
    fn three_state_moore_machine() {
        let fsms = extract_fsm(&lex_hdl(MOORE));
        assert_eq!(fsms.len(), 1);
        let f = &fsms[0];
        assert_eq!(f.state_register, "state");
        assert_eq!(f.state_labels, vec!["IDLE", "RUN", "DONE"]);
        assert_eq!(f.transition_count, 4);
        assert_eq!(f.source_span, (5, 13));
    }

    #[test]
    fn combinational_only_file() {
        assert!(extract_fsm(&lex_hdl("module m(input a, b, output y);\n  assign y = a & b;\nendmodule\n")).is_empty());
    }

    #[test]
    fn concatenated_subject_is_ignored() {
        let src = "always @* begin\n  case ({a,b})\n    S0: y = 1;\n  endcase\nend\n";
        assert!(extract_fsm(&lex_hdl(src)).is_empty());
    }

    #[test]
    fn numeric_labels_only_yield_nothing() {
        let src = "always @* case (sel) 2'b00: y = a; 2'b01, 2'b10: y = b; default: y = 0; endcase\n";
        assert!(extract_fsm(&lex_hdl(src)).is_empty());
    }

    #[test]
    fn case_outside_always_is_ignored() {
        let src = "function f; case (s) A: f = 1; endcase endfunction\n";
        assert!(extract_fsm(&lex_hdl(src)).is_empty());
    }
}
