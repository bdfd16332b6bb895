//! CSV artifacts. Every number is written with 17 significant digits so
//! that `f64` values survive a write/read cycle bit for bit.

use crate::error::{Error, Result};
use crate::lab::{DimensionReport, GridRun};
use crate::quantizer::{Codebook, QuantizationRun};
use crate::rifs::SampleCloud;
use crate::scalar::Real;
use crate::spectral::SpectralProfile;
use crate::symbolic::Antichain;

pub fn num<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

struct Table {
    w: ::csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut w = ::csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Self { w }
    }

    fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).expect("in-memory write");
    }

    fn finish(self) -> String {
        String::from_utf8(self.w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

pub fn antichain_csv<T: Real>(chain: &Antichain<T>) -> String {
    let mut t = Table::new(&["word", "nu", "p_w", "s_w", "c_w"]);
    for w in &chain.members {
        t.row([w.label(), num(w.nu()), num(w.p()), num(w.s()), num(w.c())]);
    }
    t.finish()
}

pub fn profiles_csv<T: Real>(profiles: &[SpectralProfile<T>]) -> String {
    let mut t = Table::new(&["r", "side", "t_r", "bound", "residual", "radius_at_0", "radius_at_1"]);
    for p in profiles {
        t.row([
            num(p.r),
            p.side.to_string(),
            num(p.t_r),
            num(p.bound),
            num(p.residual),
            num(p.radius_at_0),
            num(p.radius_at_1),
        ]);
    }
    t.finish()
}

fn coord_header(dim: usize, with_state: bool) -> Vec<String> {
    let mut h: Vec<String> = if with_state { vec!["state".into()] } else { Vec::new() };
    h.extend((1..=dim).map(|k| format!("x{k}")));
    h
}

/// One point per row; the optional leading column holds the 1-based state.
pub fn points_csv<T: Real>(cloud: &SampleCloud<T>, with_state: bool) -> String {
    let header = coord_header(cloud.dim, with_state);
    let mut t = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for i in 0..cloud.len() {
        let mut row: Vec<String> = Vec::with_capacity(cloud.dim + 1);
        if with_state {
            row.push((cloud.state(i) + 1).to_string());
        }
        row.extend(cloud.point(i).iter().map(|&x| num(x)));
        t.row(row);
    }
    t.finish()
}

/// Points read back from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct PointTable<T> {
    pub dim: usize,
    pub coords: Vec<T>,
    /// 0-based states, present when the file has a `state` column.
    pub states: Option<Vec<usize>>,
}

pub fn read_points<T: Real>(text: &str) -> Result<PointTable<T>> {
    let mut rdr = ::csv::Reader::from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::Csv {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let with_state = header.get(0) == Some("state");
    let dim = header.len() - usize::from(with_state);
    if dim == 0 {
        return Err(Error::Csv {
            line: 1,
            message: "no coordinate columns".into(),
        });
    }
    let mut coords = Vec::new();
    let mut states = with_state.then(Vec::new);
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Csv {
            line,
            message: e.to_string(),
        })?;
        let bad = |field: &str| Error::Csv {
            line,
            message: format!("cannot parse {field:?}"),
        };
        let mut fields = rec.iter();
        if let Some(states) = states.as_mut() {
            let s = fields.next().unwrap_or_default();
            let v: usize = s.trim().parse().map_err(|_| bad(s))?;
            if v == 0 {
                return Err(Error::Csv {
                    line,
                    message: "states are numbered from 1".into(),
                });
            }
            states.push(v - 1);
        }
        for f in fields {
            let x: f64 = f.trim().parse().map_err(|_| bad(f))?;
            coords.push(T::lit(x));
        }
    }
    Ok(PointTable { dim, coords, states })
}

pub fn codebook_csv<T: Real>(book: &Codebook<T>) -> String {
    let header = coord_header(book.dim(), false);
    let mut t = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for i in 0..book.len() {
        t.row(book.point(i).iter().map(|&x| num(x)));
    }
    t.finish()
}

pub fn run_summary_csv<T: Real>(runs: &[QuantizationRun<T>]) -> String {
    let mut t = Table::new(&["n", "r", "V", "e", "iterations", "seed"]);
    for run in runs {
        t.row([
            run.n.to_string(),
            num(run.r),
            num(run.error),
            num(run.e),
            run.iterations.to_string(),
            run.seed.to_string(),
        ]);
    }
    t.finish()
}

pub fn grid_runs_csv<T: Real>(r: T, seed: u64, runs: &[GridRun<T>]) -> String {
    let mut t = Table::new(&["n", "r", "V", "e", "iterations", "seed"]);
    for run in runs {
        t.row([
            run.n.to_string(),
            num(r),
            num(run.error),
            num(run.e),
            run.iterations.to_string(),
            seed.to_string(),
        ]);
    }
    t.finish()
}

pub fn report_csv<T: Real>(report: &DimensionReport<T>) -> String {
    let mut t = Table::new(&["n", "e", "d_local", "n_e_pow_k", "n_e_pow_l"]);
    for p in &report.points {
        t.row([
            p.n.to_string(),
            num(p.e),
            num(p.d_local),
            num(p.n_e_pow_k),
            num(p.n_e_pow_l),
        ]);
    }
    t.finish()
}

pub fn report_summary_csv<T: Real>(report: &DimensionReport<T>) -> String {
    let mut t = Table::new(&["r", "D_hat", "stderr", "l_r", "k_r", "verdict"]);
    t.row([
        num(report.r),
        num(report.d_hat),
        num(report.stderr),
        num(report.l_r),
        num(report.k_r),
        report.verdict.map(|v| v.to_string()).unwrap_or_default(),
    ]);
    t.finish()
}
