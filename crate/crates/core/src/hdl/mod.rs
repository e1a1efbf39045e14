//! (System)Verilog handling: file and PR screening, design-pair extraction,
//! and the lexer-based text tools used for cleaning and enhancement.

pub mod diff;
mod filter;
mod fsm;
mod lexer;
mod normalize;
mod pairs;
mod preprocess;

pub use filter::{is_hdl_file, screen_prs, screened_out_shas, FilterConfig, FilterConfigError};
pub use fsm::{extract_fsm, FsmSummary};
pub use lexer::{is_keyword, lex_hdl, HdlToken, TokenKind};
pub use normalize::{normalize_for_dedup, strip_comments_and_indent};
pub use pairs::{extract_design_pairs, modified_hdl_files, pairs_by_commit, ContentSource, DesignPair, PairContext};
pub use preprocess::{
    preprocess, DirResolver, ExternalPreprocessor, IncludeResolver, NoIncludes, PreprocessError, MAX_DEPTH,
};
