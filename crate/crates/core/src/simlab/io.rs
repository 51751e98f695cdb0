//! Summary CSV
//! (`family,zeta,p,N,M,kappa,kappa_se,delta,delta_se,...,n_failed,flagged,lambda0,shape0`)
//! and comparison CSV (adding `<metric>_theory` and `z_<metric>`).

use super::{Comparison, MetricSummary, SimulationSummary, SummaryRow};
use crate::error::{Error, Result};
use crate::models::{Family, Nuisance};
use std::io::{Read, Write};
use std::path::Path;

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn write_summary_csv<W: Write>(summary: &SimulationSummary, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let names: Vec<String> = summary.rows.first().map(|r| r.metrics.iter().map(|m| m.name.clone()).collect()).unwrap_or_default();
    let mut header: Vec<String> = ["family", "zeta", "p", "N", "M"].iter().map(|s| s.to_string()).collect();
    for n in &names {
        header.push(n.clone());
        header.push(format!("{n}_se"));
    }
    header.extend(["n_failed", "flagged", "lambda0", "shape0"].iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for row in &summary.rows {
        let mut rec = vec![
            summary.family.name().to_string(),
            format!("{}", row.zeta),
            row.p.to_string(),
            row.n.to_string(),
            row.m.to_string(),
        ];
        for m in &row.metrics {
            rec.push(fmt(m.mean));
            rec.push(fmt(m.se));
        }
        rec.push(row.n_failed.to_string());
        rec.push(row.flagged.to_string());
        rec.push(format!("{}", summary.nuisance0.lambda()));
        rec.push(format!("{}", summary.nuisance0.shape()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| Error::InvalidInput(format!("bad value '{s}': {e}")))
}

pub fn read_summary_csv<R: Read>(reader: R) -> Result<SimulationSummary> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let k = header.len();
    if k < 9 || header[..5] != ["family", "zeta", "p", "N", "M"] || header[k - 4..] != ["n_failed", "flagged", "lambda0", "shape0"] {
        return Err(Error::InvalidInput("not a simulation summary CSV".into()));
    }
    let metric_cols = &header[5..k - 4];
    if !metric_cols.len().is_multiple_of(2) || metric_cols.chunks(2).any(|c| c[1] != format!("{}_se", c[0])) {
        return Err(Error::InvalidInput("summary metric columns must come in (name, name_se) pairs".into()));
    }
    let names: Vec<String> = metric_cols.chunks(2).map(|c| c[0].clone()).collect();
    let mut family: Option<Family> = None;
    let mut nuisance0: Option<Nuisance> = None;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let fam: Family = rec[0].parse()?;
        if *family.get_or_insert(fam) != fam {
            return Err(Error::InvalidInput("summary mixes families".into()));
        }
        let nu = Nuisance::new(fam, num(&rec[k - 2])?, num(&rec[k - 1])?)?;
        if *nuisance0.get_or_insert(nu) != nu {
            return Err(Error::InvalidInput("summary mixes true nuisance parameters".into()));
        }
        let metrics = names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                Ok(MetricSummary { name: name.clone(), mean: num(&rec[5 + 2 * j])?, se: num(&rec[6 + 2 * j])? })
            })
            .collect::<Result<Vec<_>>>()?;
        let m: usize = num(&rec[4])?;
        let n_failed: usize = num(&rec[k - 4])?;
        rows.push(SummaryRow {
            zeta: num(&rec[1])?,
            p: num(&rec[2])?,
            n: num(&rec[3])?,
            m,
            n_converged: m.saturating_sub(n_failed),
            n_failed,
            flagged: num(&rec[k - 3])?,
            metrics,
        });
    }
    match (family, nuisance0) {
        (Some(family), Some(nuisance0)) => Ok(SimulationSummary { family, nuisance0, rows }),
        _ => Err(Error::InvalidInput("summary CSV has no rows".into())),
    }
}

pub fn write_comparison_csv<W: Write>(cmp: &Comparison, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let names: Vec<String> = cmp.rows.first().map(|r| r.metrics.iter().map(|m| m.name.clone()).collect()).unwrap_or_default();
    let mut header: Vec<String> = vec!["family".into(), "zeta".into(), "p".into()];
    for n in &names {
        header.extend([n.clone(), format!("{n}_se"), format!("{n}_theory"), format!("z_{n}")]);
    }
    header.push("pass".into());
    w.write_record(&header)?;
    for row in &cmp.rows {
        let mut rec = vec![cmp.family.name().to_string(), format!("{}", row.zeta), row.p.to_string()];
        for m in &row.metrics {
            rec.extend([fmt(m.sim), fmt(m.se), fmt(m.theory), format!("{:.4}", m.z)]);
        }
        rec.push(row.pass.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_summary_csv(summary: &SimulationSummary, path: &Path) -> Result<()> {
    write_summary_csv(summary, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn load_summary_csv(path: &Path) -> Result<SimulationSummary> {
    read_summary_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_comparison_csv(cmp: &Comparison, path: &Path) -> Result<()> {
    write_comparison_csv(cmp, std::io::BufWriter::new(std::fs::File::create(path)?))
}
