//! Correction-table CSV: `family,zeta,f,g` with `theta0,theta_star` added
//! for frailty tables (one row per curve and grid point, `g` holding the
//! curve's intercept shift).

use super::{CorrectionTable, ThetaCurve};
use crate::error::{Error, Result};
use crate::models::Family;
use std::io::{Read, Write};
use std::path::Path;

pub fn write_table_csv<W: Write>(table: &CorrectionTable, writer: W) -> Result<()> {
    table.validate()?;
    let mut w = csv::Writer::from_writer(writer);
    let name = table.family.name();
    match &table.theta_curves {
        None => {
            w.write_record(["family", "zeta", "f", "g"])?;
            for k in 0..table.grid.len() {
                w.write_record([
                    name.to_string(),
                    format!("{}", table.grid[k]),
                    format!("{:.15e}", table.f[k]),
                    format!("{:.15e}", table.g[k]),
                ])?;
            }
        }
        Some(curves) => {
            w.write_record(["family", "zeta", "f", "g", "theta0", "theta_star"])?;
            for c in curves {
                for k in 0..table.grid.len() {
                    w.write_record([
                        name.to_string(),
                        format!("{}", table.grid[k]),
                        format!("{:.15e}", table.f[k]),
                        format!("{:.15e}", c.phi_shift[k]),
                        format!("{}", c.theta0),
                        format!("{:.15e}", c.theta_star[k]),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn num(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad number '{s}': {e}")))
}

pub fn read_table_csv<R: Read>(reader: R) -> Result<CorrectionTable> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let frailty = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["family", "zeta", "f", "g"] => false,
        ["family", "zeta", "f", "g", "theta0", "theta_star"] => true,
        _ => return Err(Error::InvalidInput(format!("unexpected correction table header {header:?}"))),
    };
    let mut family: Option<Family> = None;
    let (mut grid, mut f, mut g) = (Vec::new(), Vec::new(), Vec::new());
    let mut curves: Vec<ThetaCurve> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let fam: Family = rec[0].parse()?;
        if *family.get_or_insert(fam) != fam {
            return Err(Error::InvalidInput("correction table mixes families".into()));
        }
        let zeta = num(&rec[1])?;
        if !frailty {
            grid.push(zeta);
            f.push(num(&rec[2])?);
            g.push(num(&rec[3])?);
            continue;
        }
        let theta0 = num(&rec[4])?;
        if curves.last().map(|c| c.theta0) != Some(theta0) {
            curves.push(ThetaCurve { theta0, theta_star: Vec::new(), phi_shift: Vec::new() });
        }
        let first = curves.len() == 1;
        let curve = curves.last_mut().expect("just pushed");
        if first {
            grid.push(zeta);
            f.push(num(&rec[2])?);
        } else if grid.get(curve.theta_star.len()) != Some(&zeta) {
            return Err(Error::InvalidInput("frailty curves must share one zeta grid".into()));
        }
        curve.phi_shift.push(num(&rec[3])?);
        curve.theta_star.push(num(&rec[5])?);
    }
    let family = family.ok_or_else(|| Error::InvalidInput("correction table is empty".into()))?;
    if frailty != (family == Family::ExpGammaFrailty) {
        return Err(Error::InvalidInput("theta columns are present exactly for frailty tables".into()));
    }
    if frailty {
        g = vec![0.0; grid.len()];
    }
    let table = CorrectionTable {
        family,
        grid,
        f,
        g,
        theta_curves: frailty.then_some(curves),
        failures: Vec::new(),
    };
    table.validate()?;
    Ok(table)
}

pub fn save_table_csv(table: &CorrectionTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_table_csv(table, std::io::BufWriter::new(file))
}

pub fn load_table_csv(path: &Path) -> Result<CorrectionTable> {
    read_table_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}
