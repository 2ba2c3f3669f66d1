//! CSV report tables.

use relaynet::network::{cost, NetworkState, Scenario};
use relaynet::optimizer::{junction_angles, OptimizerTrace};
use relaynet::prescan::PrescanResult;

use crate::CliError;

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// One optimizer run from a random start.
#[derive(Clone, Debug)]
pub struct SolveRow {
    pub seed: u64,
    pub trace: OptimizerTrace,
    pub state: NetworkState,
    pub hvector: Option<String>,
}

pub fn solve_table(s: &Scenario, rows: &[SolveRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "seed",
        "steps",
        "converged",
        "feasible",
        "cost",
        "active_relays",
        "junctions",
        "max_angle_dev_deg",
        "hvector",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let c = cost(s, &r.state);
        let angles = junction_angles(s, &r.state);
        let dev = angles
            .iter()
            .flat_map(|(_, a)| a.iter().map(|x| (x.to_degrees() - 120.0).abs()))
            .fold(0.0, f64::max);
        w.write_record([
            r.seed.to_string(),
            r.trace.steps().to_string(),
            r.trace.converged.to_string(),
            c.is_feasible().to_string(),
            r.trace.final_cost().map(|x| x.to_string()).unwrap_or_default(),
            r.state.active_count().to_string(),
            angles.len().to_string(),
            format!("{dev:.3}"),
            r.hvector.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// Per-candidate rows: evolved ones in rank order, then failed, then
/// discarded.
pub fn prescan_table(r: &PrescanResult) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rank",
        "candidate",
        "generation",
        "tree_length",
        "cl_percent",
        "status",
        "hvector",
        "final_hvector",
        "cost",
        "converged",
        "steps",
    ])
    .map_err(csv_err)?;
    let cand_cols = |id: Option<usize>| -> [String; 3] {
        match id {
            Some(i) => {
                let c = &r.candidates[i];
                [c.length.to_string(), r.likelihood[i].to_string(), c.hvector.to_string()]
            }
            None => [String::new(), String::new(), String::new()],
        }
    };
    for (rank, e) in r.evolved.iter().enumerate() {
        let [len, cl, h] = cand_cols(e.candidate);
        w.write_record([
            (rank + 1).to_string(),
            e.candidate.map_or("baseline".into(), |i| i.to_string()),
            e.generation.to_string(),
            len,
            cl,
            "evolved".into(),
            h,
            e.hvector.to_string(),
            e.cost.to_string(),
            e.converged.to_string(),
            e.steps.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let mut rest: Vec<(usize, &str)> = r.failed.iter().map(|&i| (i, "failed")).collect();
    rest.extend(r.discarded.iter().map(|&(i, _)| (i, "discarded")));
    for (i, status) in rest {
        let [len, cl, h] = cand_cols(Some(i));
        w.write_record([
            String::new(),
            i.to_string(),
            r.candidates[i].generation.to_string(),
            len,
            cl,
            status.into(),
            h,
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// One-row summary of a pre-scan.
pub fn prescan_summary(r: &PrescanResult, digest: &str) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario_sha256", "n", "generations", "s_pre", "cl_passed", "s_fin", "min_cost"])
        .map_err(csv_err)?;
    w.write_record([
        digest.to_string(),
        r.relays.to_string(),
        r.generations_scanned().to_string(),
        r.candidates.len().to_string(),
        r.passed().to_string(),
        r.final_classes().to_string(),
        r.min_cost().map(|c| c.to_string()).unwrap_or_default(),
    ])
    .map_err(csv_err)?;
    finish(w)
}
