//! Regenerates the committed fixtures under `fixtures/`:
//!
//! - `fixtures/mini/`: recorded API responses for one small repo,
//! - `fixtures/toy/copy_task.jsonl`: the copy task for `train-demo`,
//! - `fixtures/eval/`: a hand-made validation set, replay responses and the
//!   expected reports.
//!
//! Run from the workspace root: `cargo run -p hdlbugs-core --example make_fixtures`.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use hdlbugs_core::dataset::{apply_split, export_records, split_dataset, DatasetManifest, DatasetSample, PairFunnel, Split, Task};
use hdlbugs_core::finetune::DEFAULT_CHARS;
use hdlbugs_core::hdl::FilterConfig;
use hdlbugs_core::vcs::FixtureWriter;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

const API: &str = "https://api.github.com";
const ORG: &str = "hdlbugs-fixtures";
const NAME: &str = "mini-soc";

fn sha(n: u64) -> String {
    format!("{:040x}", 0x00c0_ffee_0000_u64 + n)
}

fn repo_url(tail: &str) -> String {
    format!("{API}/repos/{ORG}/{NAME}{tail}")
}

/// One-hunk unified diff around the changed middle of two texts.
fn patch(old: &str, new: &str) -> String {
    let a: Vec<&str> = old.lines().collect();
    let b: Vec<&str> = new.lines().collect();
    let mut pre = 0;
    while pre < a.len() && pre < b.len() && a[pre] == b[pre] {
        pre += 1;
    }
    let mut suf = 0;
    while suf < a.len() - pre && suf < b.len() - pre && a[a.len() - 1 - suf] == b[b.len() - 1 - suf] {
        suf += 1;
    }
    let ctx_before = pre.min(3);
    let ctx_after = suf.min(3);
    let start = pre - ctx_before;
    let old_len = a.len() - suf + ctx_after - start;
    let new_len = b.len() - suf + ctx_after - start;
    let mut out = format!("@@ -{},{} +{},{} @@\n", start + 1, old_len, start + 1, new_len);
    for l in &a[start..pre] {
        out.push_str(&format!(" {l}\n"));
    }
    for l in &a[pre..a.len() - suf] {
        out.push_str(&format!("-{l}\n"));
    }
    for l in &b[pre..b.len() - suf] {
        out.push_str(&format!("+{l}\n"));
    }
    for l in &a[a.len() - suf..a.len() - suf + ctx_after] {
        out.push_str(&format!(" {l}\n"));
    }
    out.trim_end_matches('\n').to_string()
}

struct Change {
    path: &'static str,
    status: &'static str,
    old: Option<String>,
    new: Option<String>,
}

struct Commit {
    n: u64,
    message: &'static str,
    parents: Vec<String>,
    changes: Vec<Change>,
}

fn modified(path: &'static str, old: &str, new: &str) -> Change {
    Change { path, status: "modified", old: Some(old.to_string()), new: Some(new.to_string()) }
}

const JTAG_BUGGY: &str = r#"// Copyright lowRISC contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

module jtagdpi #(
  parameter string Name = "jtag0",
  parameter int ListenPort = 44853
) (
  input  logic clk_i,
  input  logic rst_ni,
  output logic jtag_tck,
  output logic jtag_tms,
  output logic jtag_tdi,
  input  logic jtag_tdo
);

  import "DPI-C" function chandle jtagdpi_create(input string name, input int listen_port);
  import "DPI-C" function void jtagdpi_close(input chandle ctx);

  chandle ctx;

  initial begin
    ctx = jtagdpi_create(Name, ListenPort);
  end

  final begin
    jtagdpi_close(ctx);
    ctx = 0;
  end
endmodule
"#;

const SEC_CM_BUGGY: &str = r#"// Copyright lowRISC contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

// This is the base proxy class for all the sec_cm interfaces.
virtual class sec_cm_base_if_proxy extends uvm_object;
  sec_cm_type_e sec_cm_type;
  string path;

  `uvm_object_new

  pure virtual task inject_fault();
  pure virtual task restore_fault();
endclass
"#;

const FSM_BUGGY: &str = r#"module traffic_ctrl (
  input  logic clk_i,
  input  logic rst_ni,
  input  logic car_waiting_i,
  output logic green_o,
  output logic yellow_o,
  output logic red_o
);
  typedef enum logic [1:0] {GREEN, YELLOW, RED} state_e;
  state_e state_q, state_d;

  always_comb begin
    state_d = state_q;
    case (state_q)
      GREEN:  if (car_waiting_i) state_d = YELLOW;
      YELLOW: state_d = RED;
      RED:    state_d = GREEN;
    endcase
  end

  always_ff @(posedge clk_i or negedge rst_ni) begin
    if (!rst_ni) state_q <= RED;
    else state_q <= state_d;
  end

  assign green_o  = (state_q == GREEN);
  assign yellow_o = (state_q == YELLOW);
  assign red_o    = (state_q == RED);
endmodule
"#;

const COUNTER_BUGGY: &str = r#"module event_counter #(
  parameter int Width = 8
) (
  input  logic clk_i,
  input  logic rst_ni,
  input  logic clear_i,
  input  logic event_i,
  output logic [Width-1:0] count_o
);
  always_ff @(posedge clk_i or negedge rst_ni) begin
    if (!rst_ni) begin
      count_o <= '0;
    end else if (event_i) begin
      count_o <= count_o + 1'b1;
    end
  end
endmodule
"#;

fn commits() -> Vec<Commit> {
    let jtag_fixed = JTAG_BUGGY.replace("    ctx = 0;", "    ctx = null;");
    let vendored_buggy = JTAG_BUGGY.replace("\n  ", "\n    ").replace("// SPDX", "// Vendored copy.\n// SPDX");
    let vendored_fixed = vendored_buggy.replace("ctx = 0;", "ctx = null;");
    let sec_cm_fixed = SEC_CM_BUGGY.replace("pure virtual task ", "pure virtual task automatic ");
    let fsm_fixed = FSM_BUGGY.replace("      RED:    state_d = GREEN;\n", "      RED:    state_d = GREEN;\n      default: state_d = RED;\n");
    let counter_fixed = COUNTER_BUGGY.replace(
        "    end else if (event_i) begin",
        "    end else if (clear_i) begin\n      count_o <= '0;\n    end else if (event_i) begin",
    );
    vec![
        Commit {
            n: 1,
            message: "Initial import",
            parents: vec![],
            changes: vec![Change { path: "hw/dv/dpi/jtagdpi/jtagdpi.sv", status: "added", old: None, new: Some(JTAG_BUGGY.into()) }],
        },
        Commit {
            n: 2,
            message: "[jtagdpi] Reset context handle to null on close",
            parents: vec![sha(1)],
            changes: vec![modified("hw/dv/dpi/jtagdpi/jtagdpi.sv", JTAG_BUGGY, &jtag_fixed)],
        },
        Commit {
            n: 3,
            message: "Merge pull request #2 from contributor/jtagdpi-null",
            parents: vec![sha(1), sha(2)],
            changes: vec![modified("hw/dv/dpi/jtagdpi/jtagdpi.sv", JTAG_BUGGY, &jtag_fixed)],
        },
        Commit {
            n: 4,
            message: "[dv] Make sec_cm proxy tasks automatic",
            parents: vec![sha(3)],
            changes: vec![
                modified("hw/dv/sv/sec_cm/sec_cm_base_if_proxy.sv", SEC_CM_BUGGY, &sec_cm_fixed),
                modified("README.md", "# mini-soc\n", "# mini-soc\n\nSecurity countermeasure proxies.\n"),
                Change {
                    path: "hw/dv/sv/sec_cm/sec_cm_pkg.sv",
                    status: "added",
                    old: None,
                    new: Some("package sec_cm_pkg;\nendpackage\n".into()),
                },
            ],
        },
        Commit {
            n: 5,
            message: "[doc] Clarify counter comment",
            parents: vec![sha(4)],
            changes: vec![modified(
                "hw/ip/counter/event_counter.sv",
                COUNTER_BUGGY,
                &COUNTER_BUGGY.replace("module event_counter", "// Counts events.\nmodule event_counter"),
            )],
        },
        Commit {
            n: 6,
            message: "[traffic] Add default branch to next-state logic",
            parents: vec![sha(5)],
            changes: vec![modified("hw/ip/traffic/traffic_ctrl.sv", FSM_BUGGY, &fsm_fixed)],
        },
        Commit {
            n: 7,
            message: "Update vendored jtagdpi",
            parents: vec![sha(6)],
            changes: vec![modified("vendor/jtagdpi/jtagdpi.sv", &vendored_buggy, &vendored_fixed)],
        },
        Commit {
            n: 8,
            message: "[counter] Honour synchronous clear",
            parents: vec![sha(7)],
            changes: vec![
                modified("hw/ip/counter/event_counter.sv", COUNTER_BUGGY, &counter_fixed),
                modified("hw/ip/tie/tie_lo.sv", "module tie_lo(output y);\nassign y = 1'b1;\nendmodule\n", "module tie_lo(output y);\nassign y = 1'b0;\nendmodule\n"),
            ],
        },
    ]
}

fn date(n: u64) -> String {
    format!("2023-03-{:02}T10:00:00Z", n)
}

fn wire_commit(c: &Commit, with_files: bool) -> Value {
    let mut v = json!({
        "sha": sha(c.n),
        "commit": {
            "author": {"name": "Fixture Author", "date": date(c.n)},
            "committer": {"name": "Fixture Author", "date": date(c.n)},
            "message": c.message,
        },
        "parents": c.parents.iter().map(|p| json!({"sha": p})).collect::<Vec<_>>(),
    });
    if with_files {
        v["files"] = c
            .changes
            .iter()
            .map(|ch| {
                let p = match (&ch.old, &ch.new) {
                    (Some(o), Some(n)) => patch(o, n),
                    (None, Some(n)) => format!("@@ -0,0 +1,{} @@\n{}", n.lines().count(), n.lines().map(|l| format!("+{l}")).collect::<Vec<_>>().join("\n")),
                    _ => String::new(),
                };
                json!({"filename": ch.path, "status": ch.status, "patch": p})
            })
            .collect();
    }
    v
}

fn content(text: &str) -> Value {
    let b64 = STANDARD.encode(text.as_bytes());
    let wrapped: Vec<String> = b64.as_bytes().chunks(60).map(|c| String::from_utf8(c.to_vec()).unwrap()).collect();
    json!({"type": "file", "encoding": "base64", "content": wrapped.join("\n") + "\n"})
}

fn write_mini(root: &Path) -> std::io::Result<()> {
    let dir = root.join("mini");
    std::fs::create_dir_all(&dir)?;
    // drop earlier recordings, which are named by the hash of their URL
    for entry in std::fs::read_dir(&dir)? {
        let path = entry?.path();
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let stem = name.trim_end_matches(".meta.json");
        if stem.len() == 64 && stem.bytes().all(|b| b.is_ascii_hexdigit()) {
            std::fs::remove_file(&path)?;
        }
    }
    let w = FixtureWriter::new(&dir)?;
    let commits = commits();
    let newest_first: Vec<&Commit> = commits.iter().rev().collect();
    let page1 = repo_url("/commits?per_page=100");
    let page2 = repo_url("/commits?per_page=100&page=2");
    let link = format!("<{page2}>; rel=\"next\", <{page2}>; rel=\"last\"");
    let rate = [("x-ratelimit-remaining", "4999"), ("x-ratelimit-reset", "1700000000")];
    let listing = |cs: &[&Commit]| Value::Array(cs.iter().map(|c| wire_commit(c, false)).collect());
    w.json(&page1, &listing(&newest_first[..5]), &[("link", link.as_str()), rate[0], rate[1], ("etag", "\"commits-p1\"")])?;
    w.json(&page2, &listing(&newest_first[5..]), &[rate[0], rate[1]])?;
    for c in &commits {
        w.json(&repo_url(&format!("/commits/{}", sha(c.n))), &wire_commit(c, true), &rate)?;
        if c.parents.len() != 1 {
            continue;
        }
        for ch in &c.changes {
            let (Some(old), Some(new)) = (&ch.old, &ch.new) else { continue };
            if ch.status != "modified" || !(ch.path.ends_with(".sv") || ch.path.ends_with(".v")) || c.n == 5 {
                continue;
            }
            w.json(&repo_url(&format!("/contents/{}?ref={}", ch.path, c.parents[0])), &content(old), &rate)?;
            w.json(&repo_url(&format!("/contents/{}?ref={}", ch.path, sha(c.n))), &content(new), &rate)?;
        }
    }
    let pulls = json!([
        {"number": 3, "title": "Clarify counter comment", "body": "Comment-only change.", "labels": [{"name": "Documentation"}], "merged_at": "2023-03-05T12:00:00Z"},
        {"number": 2, "title": "jtagdpi: reset context handle", "body": "Fixes #1: assign null instead of 0 to the chandle after close.", "labels": [{"name": "bug"}], "merged_at": "2023-03-03T12:00:00Z"}
    ]);
    w.json(&repo_url("/pulls?state=all&per_page=100"), &pulls, &rate)?;
    w.json(&repo_url("/pulls/2/commits?per_page=100"), &json!([{"sha": sha(2)}]), &rate)?;
    w.json(&repo_url("/pulls/3/commits?per_page=100"), &json!([{"sha": sha(5)}]), &rate)?;
    let issues = json!([
        {"number": 3, "title": "Clarify counter comment", "body": "", "labels": [], "pull_request": {"url": "x"}},
        {"number": 2, "title": "jtagdpi: reset context handle", "body": "", "labels": [], "pull_request": {"url": "x"}},
        {"number": 1, "title": "jtagdpi leaves a stale chandle", "body": "After close the ctx handle is set to 0, which is not a valid chandle value.", "labels": [{"name": "bug"}]}
    ]);
    w.json(&repo_url("/issues?state=all&per_page=100"), &issues, &rate)?;
    std::fs::write(
        root.join("mini/mini.conf"),
        format!("# Configuration for the replayed mini repository.\nrepos = {ORG}/{NAME}\nsplit.seed = 0\n"),
    )
}

fn manifest(n: usize) -> DatasetManifest {
    DatasetManifest {
        created_at: "2023-03-01T00:00:00Z".parse().unwrap(),
        repos: vec![],
        filter_config_digest: FilterConfig::default().digest(),
        filter_config: FilterConfig::default(),
        clean_config: Default::default(),
        token_counter: "none".into(),
        pair_funnel: PairFunnel::default(),
        pair_count: 0,
        sample_count: n,
        task_counts: Default::default(),
        token_total: 0,
        split: None,
        config: Default::default(),
    }
}

fn write_toy(root: &Path) -> std::io::Result<()> {
    let chars: Vec<char> = DEFAULT_CHARS.chars().collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut samples: Vec<DatasetSample> = (0..60)
        .map(|i| {
            let len = rng.random_range(8..=16);
            let s: String = (0..len).map(|_| chars[rng.random_range(0..chars.len())]).collect();
            DatasetSample::new(Task::Repair, "Repeat the input exactly.".into(), s.clone(), s, "toy/copy".into(), "0".repeat(40), format!("copy/{i:02}"))
        })
        .collect();
    let split = split_dataset(&samples, (0.75, 0.15, 0.10), 0).unwrap();
    apply_split(&mut samples, &split);
    let mut m = manifest(samples.len());
    m.split = Some(split);
    export_records(&samples, &m, &root.join("toy/copy_task.jsonl")).map_err(std::io::Error::other)
}

fn write_eval(root: &Path) -> std::io::Result<()> {
    let sec_cm_fixed = "virtual class sec_cm_base_if_proxy extends uvm_object;\nsec_cm_type_e sec_cm_type;\nstring path;\n`uvm_object_new\npure virtual task automatic inject_fault();\npure virtual task automatic restore_fault();\nendclass";
    let sample = |task: Task, input: &str, output: &str, repo: &str, n: u64, path: &str| {
        let mut s = DatasetSample::new(task, String::new(), input.into(), output.into(), repo.into(), sha(100 + n), path.into());
        s.split = Split::Validation;
        s
    };
    let samples = vec![
        sample(Task::Localize, "chandle ctx;\nctx = 0;", "ctx = 0;", "lowRISC/opentitan", 1, "jtagdpi.sv"),
        sample(Task::Localize, "chandle ctx;\nctx = 0;", "ctx = 0;", "lowRISC/opentitan", 2, "jtagdpi_copy.sv"),
        sample(Task::Localize, "assign y = a;", "assign y = a;", "openhwgroup/cva6", 3, "tie.sv"),
        sample(Task::Repair, "module m;\nendmodule", "module m;\nassign y = 0;\nendmodule", "openhwgroup/cva6", 4, "m.sv"),
        sample(Task::Repair, &sec_cm_fixed.replace("automatic ", ""), sec_cm_fixed, "lowRISC/opentitan", 5, "sec_cm_base_if_proxy.sv"),
    ];
    export_records(&samples, &manifest(samples.len()), &root.join("eval/dataset.jsonl")).map_err(std::io::Error::other)?;
    // sample 3 (index 2) has no recorded response
    let responses = [Some("ctx = 0;"), Some("ctx = null;"), None, Some(""), Some(sec_cm_fixed)];
    let mut replay = String::new();
    for (s, r) in samples.iter().zip(responses) {
        if let Some(r) = r {
            replay.push_str(&serde_json::to_string(&json!({"case_id": s.id, "response": r})).unwrap());
            replay.push('\n');
        }
    }
    std::fs::write(root.join("eval/replay.jsonl"), replay)?;

    // "ctx = null;" against "ctx = 0;": tokens ctx = null ; / ctx = 0 ;
    // unigram overlap 3 of 4, bigram overlap 1 of 3, LCS 3 made of a run of
    // two and a run of one, so WLCS = 2^1.2 + 1 against f(4) = 4^1.2.
    let w = ((2f64.powf(1.2) + 1.0) / 4f64.powf(1.2)).powf(1.0 / 1.2);
    let header = "task,organization,repository,sha,model,rouge1_f1,rouge2_f1,rougeL_f1,rougeW_f1\n";
    let localize = format!(
        "{header}localize,lowRISC,opentitan,{},replay-mixed,1.000000000,1.000000000,1.000000000,1.000000000\n\
         localize,lowRISC,opentitan,{},replay-mixed,0.750000000,{:.9},0.750000000,{w:.9}\n",
        sha(101),
        sha(102),
        1.0 / 3.0
    );
    let repair = format!(
        "{header}repair,lowRISC,opentitan,{},replay-mixed,1.000000000,1.000000000,1.000000000,1.000000000\n\
         repair,openhwgroup,cva6,{},replay-mixed,0.000000000,0.000000000,0.000000000,0.000000000\n",
        sha(105),
        sha(104)
    );
    std::fs::write(root.join("eval/expected-localize.csv"), localize)?;
    std::fs::write(root.join("eval/expected-repair.csv"), repair)
}

fn main() -> std::io::Result<()> {
    let root = Path::new("fixtures");
    write_mini(root)?;
    write_toy(root)?;
    write_eval(root)?;
    println!("fixtures written under {}", root.display());
    Ok(())
}
