use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use chrono::{TimeZone, Utc};
use hdlbugs_core::vcs::{
    link_prs_to_issues, ChangeStatus, CountingTransport, FixtureWriter, ManualClock, MinerCache, MinerClient,
    MinerConfig, MinerError, RepoRef, ReplayTransport, Response, DEFAULT_API_BASE,
};
use serde_json::{json, Value};
use tempfile::TempDir;

fn repo() -> RepoRef {
    RepoRef::new("acme", "chip").unwrap()
}

fn url(tail: &str) -> String {
    format!("{DEFAULT_API_BASE}/repos/acme/chip{tail}")
}

fn sha(n: u32) -> String {
    format!("{n:040x}")
}

fn commit(n: u32) -> Value {
    json!({
        "sha": sha(n),
        "commit": {"author": {"name": "a", "date": "2023-01-01T00:00:00Z"}, "message": format!("c{n}")},
        "parents": [{"sha": sha(n + 1000)}],
    })
}

fn cfg(wait: bool) -> MinerConfig {
    MinerConfig { api_base: DEFAULT_API_BASE.into(), token: None, wait_on_rate_limit: wait, parallelism: 2 }
}

fn clock() -> ManualClock {
    ManualClock::new(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap())
}

fn paged_commits(dir: &TempDir) {
    let w = FixtureWriter::new(dir.path()).unwrap();
    let pages = [vec![1, 2], vec![3, 4], vec![5]];
    for (i, page) in pages.iter().enumerate() {
        let this = if i == 0 { url("/commits?per_page=100") } else { url(&format!("/commits?per_page=100&page={}", i + 1)) };
        let next = format!("<{}>; rel=\"next\"", url(&format!("/commits?per_page=100&page={}", i + 2)));
        let body = Value::Array(page.iter().map(|&n| commit(n)).collect());
        let headers: Vec<(&str, &str)> = if i + 1 < pages.len() { vec![("link", next.as_str())] } else { vec![] };
        w.json(&this, &body, &headers).unwrap();
    }
}

#[test]
fn three_pages_give_five_unique_commits() {
    let dir = TempDir::new().unwrap();
    paged_commits(&dir);
    let client = MinerClient::new(cfg(false), ReplayTransport::new(dir.path()).unwrap(), clock());
    let commits = client.fetch_commits(&repo(), None).unwrap();
    let shas: Vec<_> = commits.iter().map(|c| c.sha.clone()).collect();
    assert_eq!(shas, (1..=5).map(sha).collect::<Vec<_>>());
    assert!(commits.iter().all(|c| c.file_changes.is_empty()));
}

#[test]
fn empty_listings() {
    let dir = TempDir::new().unwrap();
    let w = FixtureWriter::new(dir.path()).unwrap();
    w.json(&url("/commits?per_page=100"), &json!([]), &[]).unwrap();
    w.json(&url("/pulls?state=all&per_page=100"), &json!([]), &[]).unwrap();
    w.json(&url("/issues?state=all&per_page=100"), &json!([]), &[]).unwrap();
    let client = MinerClient::new(cfg(false), ReplayTransport::new(dir.path()).unwrap(), clock());
    assert!(client.fetch_commits(&repo(), None).unwrap().is_empty());
    assert!(client.fetch_pulls(&repo()).unwrap().is_empty());
    assert!(client.fetch_issues(&repo()).unwrap().is_empty());
}

#[test]
fn replayed_403_carries_reset_from_header() {
    let dir = TempDir::new().unwrap();
    let w = FixtureWriter::new(dir.path()).unwrap();
    let resp = Response {
        status: 403,
        headers: vec![("x-ratelimit-remaining".into(), "0".into()), ("x-ratelimit-reset".into(), "1704067260".into())],
        body: b"{\"message\":\"API rate limit exceeded\"}".to_vec(),
    };
    w.record(&url("/commits?per_page=100"), &resp).unwrap();
    let client = MinerClient::new(cfg(false), ReplayTransport::new(dir.path()).unwrap(), clock());
    match client.fetch_commits(&repo(), None) {
        Err(e @ MinerError::RateLimited { reset }) => {
            assert_eq!(reset, Utc.timestamp_opt(1_704_067_260, 0).unwrap());
            assert_eq!(e.exit_code(), 2);
        }
        other => panic!("expected RateLimited, got {other:?}"),
    }
}

/// After the limit is exhausted no request goes out before the reset time.
#[test]
fn rate_limit_gate_is_monotone() {
    let dir = TempDir::new().unwrap();
    let w = FixtureWriter::new(dir.path()).unwrap();
    // 2024-01-01T00:01:00Z
    let limited = [("x-ratelimit-remaining", "0"), ("x-ratelimit-reset", "1704067260")];
    w.json(&url("/issues?state=all&per_page=100"), &json!([]), &limited).unwrap();
    w.json(&url("/pulls?state=all&per_page=100"), &json!([]), &[]).unwrap();

    let clk = clock();
    let reset = Utc.timestamp_opt(1_704_067_260, 0).unwrap();
    let counting = CountingTransport::with_clock(ReplayTransport::new(dir.path()).unwrap(), &clk);
    let client = MinerClient::new(cfg(false), &counting, &clk);
    client.fetch_issues(&repo()).unwrap();
    assert!(matches!(client.fetch_pulls(&repo()), Err(MinerError::RateLimited { reset: r }) if r == reset));
    assert_eq!(counting.calls(), 1);

    let clk = clock();
    let counting = CountingTransport::with_clock(ReplayTransport::new(dir.path()).unwrap(), &clk);
    let client = MinerClient::new(cfg(true), &counting, &clk);
    client.fetch_issues(&repo()).unwrap();
    client.fetch_pulls(&repo()).unwrap();
    let log = counting.log();
    assert_eq!(log.len(), 2);
    assert!(log[1].at.unwrap() >= reset);
}

fn detail_fixture(dir: &TempDir) {
    let w = FixtureWriter::new(dir.path()).unwrap();
    let mut c = commit(7);
    c["files"] = json!([
        {"filename": "rtl/a.sv", "status": "modified", "patch": "@@ -1,1 +1,1 @@\n-a\n+b"},
        {"filename": "rtl/b.v", "status": "modified"},
        {"filename": "README.md", "status": "modified", "patch": "@@ -1 +1 @@\n-x\n+y"}
    ]);
    w.json(&url(&format!("/commits/{}", sha(7))), &c, &[]).unwrap();
}

#[test]
fn commit_detail_keeps_every_file_and_tolerates_missing_patch() {
    let dir = TempDir::new().unwrap();
    detail_fixture(&dir);
    let client = MinerClient::new(cfg(false), ReplayTransport::new(dir.path()).unwrap(), clock());
    let c = client.fetch_commit_detail(&repo(), &sha(7)).unwrap();
    assert_eq!(c.file_changes.len(), 3);
    assert!(c.file_changes.iter().all(|f| f.status == ChangeStatus::Modified));
    assert!(c.file_changes[1].patch.is_none());
    assert!(c.file_changes[0].patch.is_some());
}

#[test]
fn malformed_sha_is_rejected_before_any_request() {
    let dir = TempDir::new().unwrap();
    let counting = CountingTransport::new(ReplayTransport::new(dir.path()).unwrap());
    let client = MinerClient::new(cfg(false), &counting, clock());
    assert!(matches!(client.fetch_commit_detail(&repo(), "xyz"), Err(MinerError::InvalidSha(_))));
    assert_eq!(counting.calls(), 0);
}

#[test]
fn pulls_keep_labels_and_link_issues() {
    let dir = TempDir::new().unwrap();
    let w = FixtureWriter::new(dir.path()).unwrap();
    let pulls = json!([
        {"number": 4, "title": "t4", "body": "Fixes #12", "labels": [{"name": "rtl"}], "merged_at": null},
        {"number": 3, "title": "t3", "body": null, "labels": [{"name": "RTL"}, {"name": "bug"}], "merged_at": "2023-01-01T00:00:00Z"},
        {"number": 2, "title": "t2", "body": "", "labels": [{"name": "docs"}], "merged_at": null},
        {"number": 1, "title": "t1", "body": "version #2 of the patch", "labels": [], "merged_at": null}
    ]);
    w.json(&url("/pulls?state=all&per_page=100"), &pulls, &[]).unwrap();
    for n in 1..=4 {
        w.json(&url(&format!("/pulls/{n}/commits?per_page=100")), &json!([{"sha": sha(n)}]), &[]).unwrap();
    }
    let issues = json!([
        {"number": 12, "title": "bug", "body": null, "labels": []},
        {"number": 2, "title": "old", "body": "x", "labels": [{"name": "rtl"}]}
    ]);
    w.json(&url("/issues?state=all&per_page=100"), &issues, &[]).unwrap();

    let client = MinerClient::new(cfg(false), ReplayTransport::new(dir.path()).unwrap(), clock());
    let prs = client.fetch_pulls(&repo()).unwrap();
    assert_eq!(prs.len(), 4);
    assert_eq!(prs[1].labels, vec!["RTL", "bug"]);
    assert_eq!(prs[0].labels, vec!["rtl"]);
    assert_eq!(prs[2].commit_shas, vec![sha(2)]);
    let issues = client.fetch_issues(&repo()).unwrap();
    assert_eq!(issues[0].body, "");
    let linked = link_prs_to_issues(&prs, &issues);
    assert_eq!(linked[0].linked_issue_numbers, vec![12]);
    assert_eq!(linked[3].linked_issue_numbers, vec![2]);
    assert_eq!(link_prs_to_issues(&linked, &issues), linked);
}

#[test]
fn issue_listing_drops_pull_requests() {
    let dir = TempDir::new().unwrap();
    let w = FixtureWriter::new(dir.path()).unwrap();
    let list: Vec<Value> = (1..=6)
        .map(|n| {
            let mut v = json!({"number": n, "title": format!("i{n}"), "body": "b", "labels": []});
            if n % 3 == 0 {
                v["pull_request"] = json!({"url": "u"});
            }
            v
        })
        .collect();
    w.json(&url("/issues?state=all&per_page=100"), &Value::Array(list), &[]).unwrap();
    let client = MinerClient::new(cfg(false), ReplayTransport::new(dir.path()).unwrap(), clock());
    let numbers: Vec<u64> = client.fetch_issues(&repo()).unwrap().iter().map(|i| i.number).collect();
    assert_eq!(numbers, vec![1, 2, 4, 5]);
}

#[test]
fn file_contents_at_ref() {
    let dir = TempDir::new().unwrap();
    let w = FixtureWriter::new(dir.path()).unwrap();
    let bytes = b"module m;\r\n\tassign y = 1'b0;\nendmodule\n\xff";
    let encoded = STANDARD.encode(bytes);
    let wrapped = format!("{}\n{}\n", &encoded[..20], &encoded[20..]);
    w.json(&url(&format!("/contents/rtl/m.sv?ref={}", sha(1))), &json!({"encoding": "base64", "content": wrapped}), &[]).unwrap();
    w.json(&url(&format!("/contents/rtl/empty.sv?ref={}", sha(1))), &json!({"encoding": "base64", "content": ""}), &[]).unwrap();
    w.record(&url(&format!("/contents/rtl/new.sv?ref={}", sha(1))), &Response { status: 404, headers: vec![], body: b"{}".to_vec() })
        .unwrap();
    let client = MinerClient::new(cfg(false), ReplayTransport::new(dir.path()).unwrap(), clock());
    assert_eq!(client.fetch_file_at_ref(&repo(), "rtl/m.sv", &sha(1)).unwrap(), bytes);
    assert_eq!(client.fetch_file_at_ref(&repo(), "rtl/empty.sv", &sha(1)).unwrap(), Vec::<u8>::new());
    assert!(matches!(client.fetch_file_at_ref(&repo(), "rtl/new.sv", &sha(1)), Err(MinerError::NotFound { .. })));
}

#[test]
fn second_fetch_is_conditional_and_served_from_cache() {
    let dir = TempDir::new().unwrap();
    let w = FixtureWriter::new(dir.path()).unwrap();
    w.json(&url("/issues?state=all&per_page=100"), &json!([{"number": 1, "title": "t", "body": "b", "labels": []}]), &[("etag", "\"v1\"")])
        .unwrap();
    w.json(&url("/pulls?state=all&per_page=100"), &json!([]), &[]).unwrap();
    let cache_dir = TempDir::new().unwrap();
    let counting = CountingTransport::new(ReplayTransport::new(dir.path()).unwrap());
    let client = MinerClient::new(cfg(false), &counting, clock()).with_cache(MinerCache::open(cache_dir.path()).unwrap());

    let first = client.fetch_issues(&repo()).unwrap();
    assert_eq!(counting.unconditional_calls(), 1);
    let again = client.fetch_issues(&repo()).unwrap();
    assert_eq!(first, again);
    assert_eq!(counting.unconditional_calls(), 1);
    assert_eq!(counting.calls(), 2);
    assert!(client.cached_get(&url("/issues?state=all&per_page=100")).unwrap().from_cache);

    // no etag: every call is a full fetch
    client.fetch_pulls(&repo()).unwrap();
    client.fetch_pulls(&repo()).unwrap();
    assert_eq!(counting.unconditional_calls(), 3);
}

#[test]
fn corrupted_cache_entry_is_refetched() {
    let dir = TempDir::new().unwrap();
    let w = FixtureWriter::new(dir.path()).unwrap();
    let u = url("/issues?state=all&per_page=100");
    w.json(&u, &json!([]), &[("etag", "\"v1\"")]).unwrap();
    let cache_dir = TempDir::new().unwrap();
    let counting = CountingTransport::new(ReplayTransport::new(dir.path()).unwrap());
    let client = MinerClient::new(cfg(false), &counting, clock()).with_cache(MinerCache::open(cache_dir.path()).unwrap());
    client.fetch_issues(&repo()).unwrap();
    for entry in std::fs::read_dir(cache_dir.path()).unwrap() {
        let path = entry.unwrap().path();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    }
    let fetched = client.cached_get(&u).unwrap();
    assert!(!fetched.from_cache);
    assert_eq!(counting.unconditional_calls(), 2);
}

#[test]
fn replay_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    paged_commits(&dir);
    let run = || {
        let client = MinerClient::new(cfg(false), ReplayTransport::new(dir.path()).unwrap(), clock());
        serde_json::to_vec(&client.fetch_commits(&repo(), None).unwrap()).unwrap()
    };
    assert_eq!(run(), run());
}
