//! Writing experiment results to an output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::ExperimentResult;
use crate::error::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn opt(v: Option<usize>) -> String {
    v.map(|p| p.to_string()).unwrap_or_default()
}

/// Writes `result.json`, one `qq_<name>.csv` per probability plot,
/// `h_stats.csv`, `regions.csv`, and with `svg` one `qq_<name>.svg` per plot.
/// Returns the paths written.
pub fn write_outputs(result: &ExperimentResult, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e: std::io::Error| Error::io(path, e)
    };

    let path = dir.join("result.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, result)?;
    writeln!(w).and_then(|_| w.flush()).map_err(io(&path))?;
    written.push(path);

    for (name, qq) in &result.artifacts.qq {
        let path = dir.join(format!("qq_{name}.csv"));
        let mut w = create(&path)?;
        qq.write_csv(&mut w).and_then(|_| w.flush()).map_err(io(&path))?;
        written.push(path);
        if svg {
            let path = dir.join(format!("qq_{name}.svg"));
            fs::write(&path, qq.to_svg(name)).map_err(io(&path))?;
            written.push(path);
        }
    }

    let path = dir.join("h_stats.csv");
    let mut w = create(&path)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "replication,particle,statistic,coord,value")?;
        for r in &result.artifacts.stats {
            writeln!(w, "{},{},{},{},{}", r.replication, opt(r.particle), r.statistic, r.coord, r.value)?;
        }
        w.flush()
    })()
    .map_err(io(&path))?;
    written.push(path);

    let path = dir.join("regions.csv");
    let mut w = create(&path)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "replication,particle,region,coord,lower,upper,reference,contains")?;
        for r in &result.artifacts.regions {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.replication,
                opt(r.particle),
                r.region,
                r.coord,
                r.lower,
                r.upper,
                r.reference,
                r.contains
            )?;
        }
        w.flush()
    })()
    .map_err(io(&path))?;
    written.push(path);
    Ok(written)
}
