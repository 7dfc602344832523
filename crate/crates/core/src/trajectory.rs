//! Dense record of a swarm run.
//!
//! Iteration 0 holds the initial swarm, so a run of `N` steps stores
//! `(N + 1) · S` particle records. Values are laid out iteration-major:
//! the record of particle `s` at iteration `n` sits at slot `n · S + s`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::swarm::SwarmState;

const MAGIC: &[u8; 8] = b"SWTRAJ01";

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub run_id: u64,
    swarm_size: usize,
    dim: usize,
    x: Vec<f64>,
    v: Vec<f64>,
    pbest: Vec<f64>,
    nbest: Vec<f64>,
    fx: Vec<f64>,
    exits: u64,
}

/// Borrowed view of one `(iteration, particle)` record.
#[derive(Debug, Clone, Copy)]
pub struct Record<'a> {
    pub x: &'a [f64],
    pub v: &'a [f64],
    pub pbest: &'a [f64],
    pub nbest: &'a [f64],
    pub fx: f64,
}

impl Trajectory {
    pub fn with_capacity(run_id: u64, swarm_size: usize, dim: usize, iterations: usize) -> Self {
        let slots = (iterations + 1) * swarm_size;
        Trajectory {
            run_id,
            swarm_size,
            dim,
            x: Vec::with_capacity(slots * dim),
            v: Vec::with_capacity(slots * dim),
            pbest: Vec::with_capacity(slots * dim),
            nbest: Vec::with_capacity(slots * dim),
            fx: Vec::with_capacity(slots),
            exits: 0,
        }
    }

    pub fn push_state(&mut self, state: &SwarmState) {
        assert_eq!(state.swarm_size(), self.swarm_size, "swarm size changed mid-run");
        for (p, g) in state.particles.iter().zip(&state.nbest) {
            self.x.extend_from_slice(&p.x);
            self.v.extend_from_slice(&p.v);
            self.pbest.extend_from_slice(&p.pbest);
            self.nbest.extend_from_slice(g);
            self.fx.push(p.fx);
        }
    }

    pub(crate) fn set_exits(&mut self, exits: u64) {
        self.exits = exits;
    }

    pub fn swarm_size(&self) -> usize {
        self.swarm_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of recorded steps `N`; iterations `0..=N` are available.
    pub fn iterations(&self) -> usize {
        (self.fx.len() / self.swarm_size.max(1)).saturating_sub(1)
    }

    pub fn exits(&self) -> u64 {
        self.exits
    }

    pub fn check_particle(&self, particle: usize) -> Result<()> {
        if particle < self.swarm_size {
            Ok(())
        } else {
            Err(Error::UnknownParticle {
                particle,
                swarm_size: self.swarm_size,
            })
        }
    }

    fn span(&self, n: usize, s: usize) -> std::ops::Range<usize> {
        let start = (n * self.swarm_size + s) * self.dim;
        start..start + self.dim
    }

    pub fn x(&self, n: usize, s: usize) -> &[f64] {
        &self.x[self.span(n, s)]
    }

    pub fn v(&self, n: usize, s: usize) -> &[f64] {
        &self.v[self.span(n, s)]
    }

    pub fn pbest(&self, n: usize, s: usize) -> &[f64] {
        &self.pbest[self.span(n, s)]
    }

    pub fn nbest(&self, n: usize, s: usize) -> &[f64] {
        &self.nbest[self.span(n, s)]
    }

    pub fn fx(&self, n: usize, s: usize) -> f64 {
        self.fx[n * self.swarm_size + s]
    }

    pub fn record(&self, n: usize, s: usize) -> Record<'_> {
        Record {
            x: self.x(n, s),
            v: self.v(n, s),
            pbest: self.pbest(n, s),
            nbest: self.nbest(n, s),
            fx: self.fx(n, s),
        }
    }

    /// Positions of one particle for iterations `from..=to`.
    pub fn positions(&self, s: usize, from: usize, to: usize) -> impl Iterator<Item = &[f64]> + '_ {
        (from..=to).map(move |n| self.x(n, s))
    }

    /// One coordinate of one particle over iterations `0..=N`.
    pub fn coord_path(&self, s: usize, coord: usize) -> Vec<f64> {
        (0..=self.iterations()).map(|n| self.x(n, s)[coord]).collect()
    }

    /// Euclidean distance of particle `s` to `target` over iterations `0..=N`.
    pub fn distance_path(&self, s: usize, target: &[f64]) -> Vec<f64> {
        (0..=self.iterations())
            .map(|n| crate::objectives::euclid(self.x(n, s), target))
            .collect()
    }

    /// SHA-256 over the header and every stored float, in storage order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        self.write_binary(&mut h).expect("hashing cannot fail");
        hex::encode(h.finalize())
    }

    /// One CSV row per (iteration, particle, coordinate) with header
    /// `run_id,particle,iter,coord,x,v,pbest,nbest,fx`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "run_id,particle,iter,coord,x,v,pbest,nbest,fx")?;
        for n in 0..=self.iterations() {
            for s in 0..self.swarm_size {
                let r = self.record(n, s);
                for k in 0..self.dim {
                    writeln!(
                        w,
                        "{},{},{},{},{:e},{:e},{:e},{:e},{:e}",
                        self.run_id, s, n, k, r.x[k], r.v[k], r.pbest[k], r.nbest[k], r.fx
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Binary stream: an 8-byte magic, then `run_id`, `swarm_size`, `dim`,
    /// `exits` as little-endian u64, then five blocks (x, v, pbest, nbest,
    /// fx), each a little-endian u64 element count followed by that many
    /// little-endian f64 values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        for h in [self.run_id, self.swarm_size as u64, self.dim as u64, self.exits] {
            w.write_all(&h.to_le_bytes())?;
        }
        for block in [&self.x, &self.v, &self.pbest, &self.nbest, &self.fx] {
            w.write_all(&(block.len() as u64).to_le_bytes())?;
            for v in block.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic header".into()));
        }
        let run_id = read_u64(&mut r)?;
        let swarm_size = read_u64(&mut r)? as usize;
        let dim = read_u64(&mut r)? as usize;
        let exits = read_u64(&mut r)?;
        if swarm_size == 0 || dim == 0 {
            return Err(Error::Format("zero swarm size or dimension".into()));
        }
        let mut blocks = Vec::with_capacity(5);
        for _ in 0..5 {
            let len = read_u64(&mut r)? as usize;
            let mut bytes = vec![0u8; len.checked_mul(8).ok_or_else(|| Error::Format("block too large".into()))?];
            read_exact(&mut r, &mut bytes)?;
            let block: Vec<f64> = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            blocks.push(block);
        }
        let fx = blocks.pop().unwrap();
        let nbest = blocks.pop().unwrap();
        let pbest = blocks.pop().unwrap();
        let v = blocks.pop().unwrap();
        let x = blocks.pop().unwrap();
        if fx.is_empty() || fx.len() % swarm_size != 0 {
            return Err(Error::Format(format!(
                "{} objective values do not fill whole iterations of {swarm_size} particles",
                fx.len()
            )));
        }
        let want = fx.len() * dim;
        for (name, b) in [("x", &x), ("v", &v), ("pbest", &pbest), ("nbest", &nbest)] {
            if b.len() != want {
                return Err(Error::Format(format!("block {name} has {} values, expected {want}", b.len())));
            }
        }
        Ok(Trajectory {
            run_id,
            swarm_size,
            dim,
            x,
            v,
            pbest,
            nbest,
            fx,
            exits,
        })
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_binary(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_binary(BufReader::new(file))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_csv(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Format(format!("truncated stream: {e}")))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Registry;
    use crate::swarm::{run, Domain, PsoParams};

    fn small_run(seed: u64, n: usize) -> Trajectory {
        let reg = Registry::with_builtins();
        let f = reg.lookup("himmelblau").unwrap();
        run(&PsoParams::classical(2, Domain::cube(2, -10.0, 10.0), 6, n, seed), f).unwrap()
    }

    #[test]
    fn zero_iterations_keeps_initial_records() {
        let t = small_run(1, 0);
        assert_eq!(t.iterations(), 0);
        assert_eq!(t.fx.len(), 6);
    }

    #[test]
    fn record_count_and_layout() {
        let t = small_run(2, 7);
        assert_eq!(t.iterations(), 7);
        assert_eq!(t.fx.len(), 8 * 6);
        assert_eq!(t.x.len(), 8 * 6 * 2);
        for n in 1..=7 {
            for s in 0..6 {
                let r = t.record(n, s);
                let prev = t.x(n - 1, s);
                for k in 0..2 {
                    assert!((prev[k] + r.v[k] - r.x[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn binary_round_trip_and_digest() {
        let t = small_run(3, 5);
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        let back = Trajectory::read_binary(&buf[..]).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.digest(), t.digest());
        assert!(Trajectory::read_binary(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(Trajectory::read_binary(&bad[..]), Err(Error::Format(_))));
    }

    #[test]
    fn csv_shape() {
        let t = small_run(4, 2);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "run_id,particle,iter,coord,x,v,pbest,nbest,fx");
        assert_eq!(lines.count(), 3 * 6 * 2);
    }

    #[test]
    fn seeds_change_the_digest() {
        assert_eq!(small_run(5, 10).digest(), small_run(5, 10).digest());
        assert_ne!(small_run(5, 10).digest(), small_run(6, 10).digest());
    }
}
