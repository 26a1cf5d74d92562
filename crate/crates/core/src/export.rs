//! Trajectory files (CSV and JSON) and gnuplot scripts.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::integrators::{EventRecord, Stats, Status, Trajectory};
use crate::problem::Problem;

/// Most time-series columns drawn by [`plot_script`].
pub const PLOT_MAX_SERIES: usize = 8;

/// JSON trajectory document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub problem: String,
    pub preset: String,
    pub parameters: Value,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub events: Vec<EventRecord>,
    pub status: Status,
    #[serde(default)]
    pub stats: Stats,
}

impl TrajectoryFile {
    pub fn new(problem: &Problem, traj: &Trajectory) -> Self {
        Self {
            problem: problem.name().to_string(),
            preset: problem.preset().to_string(),
            parameters: problem.parameters().to_json(),
            times: traj.times.clone(),
            states: traj.states.clone(),
            events: traj.events.clone(),
            status: traj.status,
            stats: traj.stats,
        }
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self.states.clone(),
            events: self.events.clone(),
            status: self.status,
            stats: self.stats,
        }
    }
}

pub fn write_json(file: &TrajectoryFile, out: impl Write) -> io::Result<()> {
    serde_json::to_writer(out, file).map_err(io::Error::from)
}

pub fn read_json(input: impl io::Read) -> io::Result<TrajectoryFile> {
    serde_json::from_reader(input).map_err(io::Error::from)
}

/// Writes `t,y1,…,yn` followed by one row per stored point, with 17
/// significant digits so every value round-trips exactly.
pub fn write_csv(traj: &Trajectory, mut out: impl Write) -> io::Result<()> {
    let n = traj.num_vars();
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",y{i}"));
    }
    writeln!(out, "{header}")?;
    for (t, y) in traj.times.iter().zip(&traj.states) {
        write!(out, "{t:.16e}")?;
        for v in y {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

/// Reads a file written by [`write_csv`] into times and states.
pub fn read_csv(input: impl BufRead) -> io::Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| invalid("empty CSV file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.first() != Some(&"t") {
        return Err(invalid(format!("expected header starting with 't', got '{header}'")));
    }
    let (mut times, mut states) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values: Result<Vec<f64>, _> = line.trim().split(',').map(str::parse::<f64>).collect();
        let values = values.map_err(|e| invalid(format!("row {}: {e}", k + 2)))?;
        if values.len() != cols.len() {
            return Err(invalid(format!("row {} has {} columns, expected {}", k + 2, values.len(), cols.len())));
        }
        times.push(values[0]);
        states.push(values[1..].to_vec());
    }
    Ok((times, states))
}

fn quote(path: &str) -> String {
    format!("'{}'", path.replace('\'', "''"))
}

/// Gnuplot script for a CSV trajectory with `num_vars` state columns: a
/// time-series plot of the first [`PLOT_MAX_SERIES`] components, plus a
/// phase-space plot for two- and three-variable problems.
pub fn plot_script(csv_path: &str, num_vars: usize, title: &str) -> String {
    let data = quote(csv_path);
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str(&format!("set title {}\n", quote(title)));
    s.push_str("set xlabel 't'\n");
    let series: Vec<String> = (1..=num_vars.min(PLOT_MAX_SERIES))
        .map(|i| format!("{} using 1:{} with lines", if i == 1 { data.as_str() } else { "''" }, i + 1))
        .collect();
    s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
    match num_vars {
        2 => {
            s.push_str("pause -1 'press enter for the phase plot'\n");
            s.push_str("set xlabel 'y1'\nset ylabel 'y2'\n");
            s.push_str(&format!("plot {data} using 2:3 with lines notitle\n"));
        }
        3 => {
            s.push_str("pause -1 'press enter for the phase plot'\n");
            s.push_str("set xlabel 'y1'\nset ylabel 'y2'\nset zlabel 'y3'\n");
            s.push_str(&format!("splot {data} using 2:3:4 with lines notitle\n"));
        }
        _ => {}
    }
    s.push_str("pause -1\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{integrate_adaptive, integrate_with_events, IntegratorOptions};
    use crate::registry::canonical;

    fn lorenz() -> (Problem, Trajectory) {
        let p = canonical("lorenz63").unwrap();
        let traj = integrate_adaptive(&p, &IntegratorOptions::default()).unwrap();
        (p, traj)
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let (_, traj) = lorenz();
        let mut buf = Vec::new();
        write_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,y1,y2,y3\n"));
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 4);
        let (times, states) = read_csv(&buf[..]).unwrap();
        assert_eq!(times, traj.times);
        assert_eq!(states, traj.states);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let p = canonical("bouncingball").unwrap();
        let traj = integrate_with_events(&p, &IntegratorOptions::default()).unwrap();
        let file = TrajectoryFile::new(&p, &traj);
        let mut buf = Vec::new();
        write_json(&file, &mut buf).unwrap();
        let back = read_json(&buf[..]).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.trajectory(), traj);
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["problem"], "bouncingball");
        assert_eq!(v["status"], "complete");
        assert_eq!(v["parameters"]["g"], 9.8);
        assert!(!v["events"].as_array().unwrap().is_empty());
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(read_csv(&b""[..]).is_err());
        assert!(read_csv(&b"x,y1\n1,2\n"[..]).is_err());
        assert!(read_csv(&b"t,y1\n1,2,3\n"[..]).is_err());
        assert!(read_csv(&b"t,y1\n1,abc\n"[..]).is_err());
    }

    #[test]
    fn plot_scripts() {
        let s3 = plot_script("out.csv", 3, "lorenz63");
        assert!(s3.contains("splot 'out.csv' using 2:3:4"));
        let s2 = plot_script("it's.csv", 2, "x");
        assert!(s2.contains("plot 'it''s.csv' using 2:3") && !s2.contains("splot"));
        let s40 = plot_script("l96.csv", 40, "lorenz96");
        assert!(!s40.contains("splot") && s40.contains(&format!("using 1:{}", PLOT_MAX_SERIES + 1)));
        assert!(!s40.contains(&format!("using 1:{}", PLOT_MAX_SERIES + 2)));
    }
}
