//! CSV and text serialization.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! every value reads back bit-exact; files use LF line endings.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::asymptotics::AsymptoticCoefficients;
use crate::dynamics::{ExcitationTrace, Field};
use crate::error::{Error, Result};
use crate::fock_single::Fock1Result;
use crate::optimizer::OptimizationResult;
use crate::pulses::PulseShape;

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn write_rows<W: Write>(out: W, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(header)?;
    let len = columns.first().map_or(0, |c| c.len());
    for i in 0..len {
        w.write_record(columns.iter().map(|c| fmt_f64(c[i])))?;
    }
    w.flush()?;
    Ok(())
}

/// Generic header-plus-numeric-columns table.
pub fn write_table<W: Write>(out: W, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    if header.len() != columns.len() || columns.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(Error::InvalidArgument("table header and columns do not match".into()));
    }
    write_rows(out, header, columns)
}

/// `t,f` samples of a tabulated pulse.
pub fn write_tabulated<W: Write>(out: W, shape: &PulseShape) -> Result<()> {
    match shape {
        PulseShape::Tabulated(tab) => write_rows(out, &["t", "f"], &[tab.times(), tab.values()]),
        _ => Err(Error::InvalidArgument("only tabulated pulses serialize as samples".into())),
    }
}

/// Reads a `t,f` table back into a (renormalized) tabulated pulse.
pub fn read_tabulated<R: Read>(input: R) -> Result<PulseShape> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "f" {
        return Err(Error::InvalidArgument(format!("expected header `t,f`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("not a number: `{s}`")))
        };
        times.push(parse(&rec[0])?);
        values.push(parse(&rec[1])?);
    }
    PulseShape::tabulated(times, values)
}

pub fn read_tabulated_file(path: &Path) -> Result<PulseShape> {
    read_tabulated(File::open(path)?)
}

/// `t,pe` for a single-photon result.
pub fn write_fock1<W: Write>(out: W, res: &Fock1Result) -> Result<()> {
    write_rows(out, &["t", "pe"], &[&res.times, &res.pe])
}

/// `t,pe,sigma`, or `t,pe_N,sigma_Nminus1` for the Fock hierarchy.
pub fn write_trace<W: Write>(out: W, trace: &ExcitationTrace) -> Result<()> {
    let header: &[&str] = match trace.drive.field {
        Field::Fock { .. } => &["t", "pe_N", "sigma_Nminus1"],
        _ => &["t", "pe", "sigma"],
    };
    write_rows(out, header, &[&trace.times, &trace.pe, &trace.sigma])
}

/// One row: every parameter by name, then `t_max,pe_max,evaluations,converged`.
pub fn write_optimization<W: Write>(out: W, res: &OptimizationResult) -> Result<()> {
    let mut w = writer(out);
    let mut header: Vec<String> = res.params.iter().map(|(k, _)| k.clone()).collect();
    header.extend(["t_max", "pe_max", "evaluations", "converged"].map(String::from));
    w.write_record(&header)?;
    let mut row: Vec<String> = res.params.iter().map(|(_, v)| fmt_f64(*v)).collect();
    row.push(fmt_f64(res.t_max));
    row.push(fmt_f64(res.pe_max));
    row.push(res.evaluations.to_string());
    row.push(res.converged.to_string());
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

/// Human-readable summary of an optimization.
pub fn optimization_summary(label: &str, res: &OptimizationResult) -> String {
    let mut s = format!("{label}\n");
    for ((k, v), width) in res.params.iter().zip(&res.bracket) {
        s.push_str(&format!("  {k:<8} = {v:.6}  (bracket {width:.1e})\n"));
    }
    s.push_str(&format!("  t_max    = {:.6}\n", res.t_max));
    s.push_str(&format!("  pe_max   = {:.6}\n", res.pe_max));
    s.push_str(&format!(
        "  {} evaluations, {}\n",
        res.evaluations,
        if res.converged { "converged" } else { "NOT converged" }
    ));
    s
}

/// `shape,alpha,beta_lossless,beta_loss`.
///
/// With `fock = false` the lossless column is the coherent `β`; with
/// `fock = true` it is the Fock numerator `β − π²/16`.
pub fn write_coefficients<W: Write>(out: W, rows: &[AsymptoticCoefficients], fock: bool) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["shape", "alpha", "beta_lossless", "beta_loss"])?;
    for c in rows {
        let lossless = if fock { c.beta_lossless() } else { c.beta };
        w.write_record([c.family.name().to_string(), fmt_f64(c.alpha), fmt_f64(lossless), fmt_f64(c.beta_loss())])?;
    }
    w.flush()?;
    Ok(())
}

/// Buffered file writer, creating parent directories.
pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &v in &[0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn tabulated_round_trip_is_bit_exact() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t: &f64| (-t).exp() * t.sin()).collect();
        let shape = PulseShape::tabulated(times, values).unwrap();
        let mut buf = Vec::new();
        write_tabulated(&mut buf, &shape).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,f\n") && !text.contains('\r'));
        let back = read_tabulated(&buf[..]).unwrap();
        assert_eq!(back, shape);
    }

    #[test]
    fn bad_header_rejected() {
        let r = read_tabulated("time,amp\n0,1\n1,1\n".as_bytes());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}
