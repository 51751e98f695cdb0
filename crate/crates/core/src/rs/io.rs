//! CSV output for solution grids.

use super::{NuisanceStar, Rescaled, RsModel, RsSolution};
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub const HEADER: [&str; 10] = ["zeta", "w_over_S", "v", "u", "c", "d", "theta", "phi_shift", "residual", "converged"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

/// One CSV row per solution. `c` and `d` are the width ratio
/// `sigma*/sigma0` and `(phi* - phi0)/sigma*` for location-scale noise and
/// empty for frailty noise, whose variance goes in `theta`.
pub fn write_solutions_csv<W: Write>(sols: &[RsSolution], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for s in sols {
        let location_scale = s.nuisance_star.sigma_ratio.is_some();
        w.write_record([
            format!("{}", s.zeta),
            format!("{:.12e}", s.w_over_s),
            format!("{:.12e}", s.v_star),
            format!("{:.12e}", s.u_star),
            opt(s.nuisance_star.sigma_ratio),
            opt(location_scale.then_some(s.rescaled.d)),
            opt(s.nuisance_star.theta),
            format!("{:.12e}", s.nuisance_star.phi_shift),
            format!("{:.3e}", s.residual),
            s.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_solutions_csv(sols: &[RsSolution], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_solutions_csv(sols, std::io::BufWriter::new(file))
}

fn parse(field: &str, name: &str) -> Result<Option<f64>> {
    let t = field.trim();
    if t.is_empty() {
        return Ok(None);
    }
    t.parse::<f64>().map(Some).map_err(|e| Error::InvalidInput(format!("column {name}: bad value '{t}': {e}")))
}

/// Reads a grid written by [`write_solutions_csv`]. The file does not
/// record the model, so the caller supplies it together with the noise
/// width `sigma0` in whose units the `v` and `u` columns are expressed
/// (one for the Weibull and log-logistic reductions).
pub fn read_solutions_csv<R: Read>(reader: R, model: RsModel, sigma0: f64) -> Result<Vec<RsSolution>> {
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(HEADER) {
        return Err(Error::InvalidInput(format!("expected header {}", HEADER.join(","))));
    }
    let frailty = match model {
        RsModel::Frailty { .. } => true,
        RsModel::Linear { noise } => !noise.is_location_scale(),
        RsModel::Generic { noise } => !noise.is_location_scale(),
        RsModel::Weibull | RsModel::LogLogistic => false,
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let col = |k: usize| parse(&rec[k], HEADER[k]);
        let need = |k: usize| col(k)?.ok_or_else(|| Error::InvalidInput(format!("column {} is empty", HEADER[k])));
        let (zeta, w_over_s, v, u, phi_shift, residual) = (need(0)?, need(1)?, need(2)?, need(3)?, need(7)?, need(8)?);
        let converged = match rec[9].trim() {
            "true" => true,
            "false" => false,
            other => return Err(Error::InvalidInput(format!("column converged: bad value '{other}'"))),
        };
        let theta = col(6)?;
        if theta.is_some() != frailty {
            return Err(Error::InvalidInput(format!("row at zeta {zeta} does not belong to a {model:?} solution")));
        }
        let (nuisance_star, rescaled, boundary) = match theta {
            Some(theta) => (
                NuisanceStar { phi_shift, sigma_ratio: None, theta: Some(theta) },
                Rescaled { a: u, b: v, c: phi_shift, d: theta },
                theta == 0.0,
            ),
            None => {
                let c = need(4)?;
                (
                    NuisanceStar { phi_shift, sigma_ratio: Some(c), theta: None },
                    Rescaled { a: u / (sigma0 * c), b: v / (sigma0 * c), c, d: need(5)? },
                    false,
                )
            }
        };
        out.push(RsSolution {
            model,
            zeta,
            w_over_s,
            v_star: v,
            u_star: u,
            nuisance_star,
            rescaled,
            residual,
            converged,
            boundary,
            mean_tanh: None,
        });
    }
    Ok(out)
}

pub fn load_solutions_csv(path: &Path, model: RsModel, sigma0: f64) -> Result<Vec<RsSolution>> {
    read_solutions_csv(std::io::BufReader::new(std::fs::File::open(path)?), model, sigma0)
}
