//! `alcove mset`: boundary cloud of the attainable limit set.

use alcove::asymptotics::Regime;
use alcove::mset::{project_cloud, ConfidenceEllipse, LimitSet};

use crate::manifest;
use crate::{CommonArgs, Outcome};

pub fn run(
    common: &CommonArgs,
    d: f64,
    count: usize,
    projection: Option<usize>,
    ellipse_alpha: Option<f64>,
) -> Result<Outcome, String> {
    crate::configure_threads(common.threads)?;
    let (text, hash) = manifest::read_config(&common.config)?;
    let regime: Regime =
        serde_json::from_str(&text).map_err(|e| format!("regime file: {e}"))?;
    let sigma = regime.sigma();
    let c = regime.c().clone();
    let p = regime.p();

    let set = LimitSet::new(regime)
        .scaled(d)
        .map_err(|e| e.to_string())?;
    let seed = common.seed.unwrap_or(0);
    let cloud = set
        .sample_boundary_seeded(count, seed)
        .map_err(|e| e.to_string())?;

    let mut outputs = vec!["boundary.csv".into()];
    let csv = set.cloud_csv(&cloud);

    let svg = if p == 2 {
        let ellipse = match ellipse_alpha {
            Some(alpha) => Some(
                ConfidenceEllipse::new(c, sigma, alpha).map_err(|e| e.to_string())?,
            ),
            None => None,
        };
        Some(
            set.cloud_svg(&cloud, ellipse.as_ref())
                .map_err(|e| e.to_string())?,
        )
    } else {
        if ellipse_alpha.is_some() {
            return Err("--ellipse-alpha requires a two-dimensional regime".into());
        }
        None
    };

    let projected = match projection {
        Some(drop) => {
            let points = project_cloud(&cloud, drop).map_err(|e| e.to_string())?;
            let mut out = String::new();
            let kept: Vec<usize> = (0..p).filter(|&j| j != drop).collect();
            out.push_str(
                &kept
                    .iter()
                    .map(|j| format!("m_{}", j + 1))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
            for pt in &points {
                let row: Vec<String> = pt.iter().map(|v| format!("{v}")).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            Some(out)
        }
        None => None,
    };

    manifest::prepare_out_dir(&common.out)?;
    manifest::write_output(&common.out, "boundary.csv", &csv)?;
    if let Some(svg) = svg {
        manifest::write_output(&common.out, "boundary.svg", &svg)?;
        outputs.push("boundary.svg".into());
    }
    if let Some(projected) = projected {
        manifest::write_output(&common.out, "projection.csv", &projected)?;
        outputs.push("projection.csv".into());
    }
    manifest::write_manifest(&common.out, hash, Some(seed), outputs)?;
    Ok(Outcome::Clean)
}
