//! `alcove fit`: one penalized solve with full diagnostics.

use serde::Serialize;

use alcove::linmodel::{
    containment_slack, fit_adaptive_lasso, FitDocument, ProblemDocument, SolverOptions,
};

use crate::manifest;
use crate::{CommonArgs, Outcome};

/// Slack below this is reported as a violated deviation bound.
const SLACK_TOL: f64 = 1e-8;

#[derive(Debug, Serialize)]
struct FitOutput {
    #[serde(flatten)]
    fit: FitDocument,
    /// Componentwise deviation-bound margins `lambda_j - z_j (X'X z)_j`.
    containment_slack: Vec<f64>,
    sweeps: usize,
    converged: bool,
}

pub fn run(common: &CommonArgs) -> Result<Outcome, String> {
    crate::configure_threads(common.threads)?;
    let (text, hash) = manifest::read_config(&common.config)?;
    let doc: ProblemDocument =
        serde_json::from_str(&text).map_err(|e| format!("problem file: {e}"))?;
    let (problem, tuning) = doc.to_problem().map_err(|e| e.to_string())?;

    // Solve before creating any output: parse/validation/solver failures
    // must leave the output directory untouched.
    let solved = fit_adaptive_lasso(&problem, &tuning, &SolverOptions::default());
    let (fit, converged) = match solved {
        Ok(fit) => (fit, true),
        Err(err) => return Err(err.to_string()),
    };
    let slack = containment_slack(&problem.gram(), &tuning, &fit);

    let output = FitOutput {
        fit: FitDocument::new(&problem, &tuning, &fit),
        containment_slack: slack.iter().copied().collect(),
        sweeps: fit.sweeps,
        converged,
    };

    let mut csv = String::from("coordinate,lambda,beta_ls,beta_al,slack\n");
    for j in 0..problem.p() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            j,
            tuning.as_vector()[j],
            fit.beta_ls[j],
            fit.beta_al[j],
            slack[j]
        ));
    }

    manifest::prepare_out_dir(&common.out)?;
    let json = serde_json::to_string_pretty(&output).expect("fit serializes");
    manifest::write_output(&common.out, "fit.json", &json)?;
    manifest::write_output(&common.out, "coefficients.csv", &csv)?;
    manifest::write_manifest(
        &common.out,
        hash,
        None,
        vec!["fit.json".into(), "coefficients.csv".into()],
    )?;

    let min_slack = slack.min();
    if min_slack < -SLACK_TOL {
        return Ok(Outcome::Degraded(format!(
            "deviation-bound slack {min_slack:.3e} below {:-.0e}",
            -SLACK_TOL
        )));
    }
    Ok(Outcome::Clean)
}
