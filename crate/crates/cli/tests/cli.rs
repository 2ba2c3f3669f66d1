use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TWO_GAPS: &str = r#"{
  "version": 1,
  "terminals": [[-6, 0], [6, 0]],
  "obstacles": [{"cx": -2, "cy": 0, "r": 1}, {"cx": 2, "cy": 0, "r": 1}],
  "relay_budget": 10,
  "seed": 3
}"#;

fn relaynet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaynet"))
        .args(args)
        .env("RELAYNET_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn malformed_scenario_reports_location() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\n  \"version\": 1,\n  \"terminals\": [[0, 0], [1, 1]],\n  \"relay_budget\": \"many\"\n}");
    let o = relaynet(&["solve", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 4"), "{err}");

    let inside = write(
        &dir,
        "inside.json",
        r#"{"version": 1, "terminals": [[0, 0], [5, 0]], "obstacles": [{"cx": 5, "cy": 0.5, "r": 1}], "relay_budget": 3}"#,
    );
    let o = relaynet(&["solve", s(&inside)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("terminal 1"), "{}", stderr(&o));
}

#[test]
fn solve_svg_circles_match_disks() {
    let dir = TempDir::new().unwrap();
    let sc = write(&dir, "s.json", TWO_GAPS);
    let svg = dir.path().join("out.svg");
    let csv = dir.path().join("out.csv");
    let o = relaynet(&["solve", s(&sc), "--svg", s(&svg), "--out", s(&csv), "--scale", "7.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("sha256"));

    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("well-formed svg");
    let circles: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("circle")).collect();
    let obstacles: Vec<f64> = circles
        .iter()
        .filter(|n| n.attribute("class") == Some("obstacle"))
        .map(|n| n.attribute("r").unwrap().parse().unwrap())
        .collect();
    assert_eq!(obstacles, vec![7.5, 7.5]);
    let disks = circles.iter().filter(|n| n.attribute("class") == Some("disk")).count();
    assert_eq!(circles.len(), obstacles.len() + disks);

    // the CSV row carries the cost; radii in the SVG must reproduce it
    let mut rd = csv::Reader::from_path(&csv).unwrap();
    let head = rd.headers().unwrap().clone();
    let row = rd.records().next().unwrap().unwrap();
    let at = |k: &str| row.get(head.iter().position(|h| h == k).unwrap()).unwrap().to_string();
    let reported: f64 = at("cost").parse().unwrap();
    let area: f64 = circles
        .iter()
        .filter(|n| n.attribute("class") == Some("disk"))
        .map(|n| {
            let r: f64 = n.attribute("r").unwrap().parse().unwrap();
            (r / 7.5).powi(2)
        })
        .sum();
    assert!((area - reported).abs() < 1e-9 * reported.max(1.0), "{area} vs {reported}");
}

#[test]
fn classify_outputs() {
    let dir = TempDir::new().unwrap();
    let sc = write(&dir, "s.json", TWO_GAPS);
    let run = |name: &str, net: &str| {
        let p = write(&dir, name, net);
        relaynet(&["classify", s(&sc), s(&p)])
    };

    let far = run("far.json", r#"{"nodes": [[3, 3], [6, 6]], "edges": [[0, 1]]}"#);
    assert_eq!(far.status.code(), Some(0), "{}", stderr(&far));
    let line = stdout(&far).lines().next().unwrap().to_string();
    assert!(line.chars().all(|c| c == '0' || c == ';'), "{line}");

    let detours = [
        r#"{"nodes": [[-6, 0], [6, 0], [0, 3]], "edges": [[0, 2], [2, 1]]}"#,
        r#"{"nodes": [[-6, 0], [6, 0], [0, -3]], "edges": [[0, 2], [2, 1]]}"#,
        r#"{"nodes": [[-6, 0], [6, 0], [-2, 2], [2, -2]], "edges": [[0, 2], [2, 3], [3, 1]]}"#,
        r#"{"nodes": [[-6, 0], [6, 0], [-2, -2], [2, 2]], "edges": [[0, 2], [2, 3], [3, 1]]}"#,
    ];
    let mut seen = Vec::new();
    for (k, d) in detours.iter().enumerate() {
        let o = run(&format!("d{k}.json"), d);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let out = stdout(&o);
        assert!(out.lines().nth(1).unwrap().starts_with("partition "));
        seen.push(out.lines().next().unwrap().to_string());
    }
    for i in 0..seen.len() {
        for j in i + 1..seen.len() {
            assert_ne!(seen[i], seen[j]);
        }
    }

    let looped = run(
        "loop.json",
        r#"{"nodes": [[-6, 0], [6, 0], [0, 3], [0, -3]], "edges": [[0, 2], [2, 1], [1, 3], [3, 0]]}"#,
    );
    assert_eq!(looped.status.code(), Some(2));
    assert!(stderr(&looped).contains("loop detected"), "{}", stderr(&looped));
}

#[test]
fn analytic_subcommands() {
    let o = relaynet(&["analytic", "dmin", "3"]);
    assert!(stdout(&o).contains("4.26197262739"));
    let o = relaynet(&["analytic", "dmin", "2"]);
    assert_eq!(o.status.code(), Some(2));

    let o = relaynet(&["analytic", "chain", "4", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("method closed form"));
    assert_eq!(out.lines().filter(|l| l.starts_with("relay ")).count(), 4);

    let o = relaynet(&["analytic", "triangle", "0", "0", "1", "0", "0.5", "-0.866"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("circumcenter"));
}

#[test]
fn prescan_threshold_and_generations() {
    let dir = TempDir::new().unwrap();
    let sc = write(&dir, "s.json", TWO_GAPS);
    let out = dir.path().join("all.csv");
    let o = relaynet(&["prescan", s(&sc), "--generations", "2", "--cl-threshold", "101", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let table = std::fs::read_to_string(&out).unwrap();
    assert!(table.lines().count() > 1);
    assert!(table.lines().skip(1).all(|l| l.contains("discarded")), "{table}");

    let pre = |gens: &str| {
        let sum = dir.path().join(format!("sum{gens}.csv"));
        let o = relaynet(&[
            "prescan", s(&sc), "--generations", gens, "--cl-threshold", "101", "--out", s(&out), "--summary", s(&sum),
        ]);
        assert_eq!(o.status.code(), Some(4));
        let mut rd = csv::Reader::from_path(&sum).unwrap();
        let head = rd.headers().unwrap().clone();
        let row = rd.records().next().unwrap().unwrap();
        row.get(head.iter().position(|h| h == "s_pre").unwrap()).unwrap().parse::<usize>().unwrap()
    };
    assert!(pre("1") < pre("3"));
}

#[test]
fn prescan_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let sc = write(&dir, "s.json", TWO_GAPS);
    let mut tables = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("t{k}.csv"));
        let sum = dir.path().join(format!("s{k}.csv"));
        let o = relaynet(&["prescan", s(&sc), "--generations", "2", "--out", s(&out), "--summary", s(&sum)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        tables.push((std::fs::read(&out).unwrap(), std::fs::read(&sum).unwrap()));
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn paths_find_every_detour() {
    let dir = TempDir::new().unwrap();
    let sc = write(&dir, "s.json", TWO_GAPS);
    let o = relaynet(&["paths", s(&sc)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let last = out.lines().last().unwrap();
    let classes: usize = last.split(", ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!(classes >= 4, "{out}");
    let lengths: Vec<f64> = out.lines().filter_map(|l| l.split(' ').nth(1)?.parse().ok()).collect();
    assert!(lengths.windows(2).all(|w| w[0] <= w[1] + 1e-9));

    let o = relaynet(&["paths", s(&sc), "--from", "0", "--to", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
