//! Legacy-VTK ASCII snapshots.
//!
//! Layout, one token group per line:
//!
//! ```text
//! # vtk DataFile Version 3.0
//! # nsch-sim snapshot v1
//! ASCII
//! DATASET STRUCTURED_POINTS
//! DIMENSIONS <nx+1> <ny+1> 1
//! ORIGIN 0 0 0
//! SPACING <dx> <dy> 1
//! FIELD FieldData 5
//! time 1 1 double            <t>
//! step 1 1 int               <step>
//! extent 2 1 double          <lx> <ly>
//! u_faces 1 <(nx+1)ny> double, then v_faces 1 <nx(ny+1)> double
//! CELL_DATA <nx ny>
//! SCALARS phi_<i> double 1 + LOOKUP_TABLE default, for every phase
//! SCALARS rho ..., SCALARS p ...
//! VECTORS v double           cell averages of the face velocities
//! ```
//!
//! Arrays are written in storage order (x fastest), six values per line,
//! each in the shortest form that parses back to the same bits. The reader
//! takes the staggered velocity from the face arrays, so a write/read cycle
//! is exact.

use std::fmt::Write as _;
use std::path::Path;

use nsch_core::fields::{Grid, ScalarField, VectorField};
use nsch_core::ns::MomentumState;
use nsch_core::thermo::PhaseField;

use crate::error::{Result, SimError};

pub const MAGIC: &str = "# nsch-sim snapshot v1";
const PER_LINE: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotData {
    pub step: usize,
    pub t: f64,
    pub phi: PhaseField,
    pub state: MomentumState,
}

fn push_values(out: &mut String, xs: &[f64]) {
    for chunk in xs.chunks(PER_LINE) {
        let mut first = true;
        for x in chunk {
            if !first {
                out.push(' ');
            }
            write!(out, "{x:e}").expect("writing to a String");
            first = false;
        }
        out.push('\n');
    }
}

fn push_scalars(out: &mut String, name: &str, xs: &[f64]) {
    writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").expect("writing to a String");
    push_values(out, xs);
}

/// Renders a snapshot as text.
pub fn render(step: usize, t: f64, phi: &PhaseField, state: &MomentumState) -> String {
    let g = phi.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "# vtk DataFile Version 3.0\n{MAGIC}\nASCII\nDATASET STRUCTURED_POINTS").expect("writing to a String");
    writeln!(w, "DIMENSIONS {} {} 1\nORIGIN 0 0 0\nSPACING {:e} {:e} 1", nx + 1, ny + 1, g.dx, g.dy).expect("writing to a String");
    writeln!(w, "FIELD FieldData 5\ntime 1 1 double\n{t:e}\nstep 1 1 int\n{step}").expect("writing to a String");
    writeln!(w, "extent 2 1 double\n{:e} {:e}", g.lx, g.ly).expect("writing to a String");
    writeln!(w, "u_faces 1 {} double", state.v.u.len()).expect("writing to a String");
    push_values(w, &state.v.u);
    writeln!(w, "v_faces 1 {} double", state.v.v.len()).expect("writing to a String");
    push_values(w, &state.v.v);
    writeln!(w, "CELL_DATA {}", nx * ny).expect("writing to a String");
    for i in 0..phi.n {
        push_scalars(w, &format!("phi_{i}"), phi.component(i));
    }
    push_scalars(w, "rho", &state.rho.data);
    push_scalars(w, "p", &state.p.data);
    writeln!(w, "VECTORS v double").expect("writing to a String");
    for j in 0..ny {
        for i in 0..nx {
            let u = 0.5 * (state.v.u[g.u_idx(i, j)] + state.v.u[g.u_idx(i + 1, j)]);
            let v = 0.5 * (state.v.v[g.v_idx(i, j)] + state.v.v[g.v_idx(i, j + 1)]);
            writeln!(w, "{u:e} {v:e} 0").expect("writing to a String");
        }
    }
    s
}

pub fn write_snapshot(path: &Path, step: usize, t: f64, phi: &PhaseField, state: &MomentumState) -> Result<()> {
    std::fs::write(path, render(step, t, phi, state)).map_err(|e| SimError::io(path, e))
}

struct Tokens<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
    pending: std::vec::IntoIter<&'a str>,
}

impl<'a> Tokens<'a> {
    fn line(&mut self) -> std::result::Result<&'a str, String> {
        self.lines.next().ok_or_else(|| "unexpected end of file".to_string())
    }

    fn header(&mut self, expect: &[&str]) -> std::result::Result<Vec<&'a str>, String> {
        let line = self.line()?;
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() < expect.len() || words.iter().zip(expect).any(|(w, e)| !e.is_empty() && w != e) {
            return Err(format!("expected {expect:?}, found {line:?}"));
        }
        Ok(words)
    }

    fn values(&mut self, count: usize) -> std::result::Result<Vec<f64>, String> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let tok = match self.pending.next() {
                Some(t) => t,
                None => {
                    self.pending = self.line()?.split_whitespace().collect::<Vec<_>>().into_iter();
                    continue;
                }
            };
            out.push(tok.parse::<f64>().map_err(|_| format!("not a number: {tok:?}"))?);
        }
        if self.pending.next().is_some() {
            return Err("trailing values after array".into());
        }
        Ok(out)
    }
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.parse().map_err(|_| format!("not a count: {s:?}"))
}

/// Parses text produced by [`render`].
pub fn parse(text: &str) -> std::result::Result<SnapshotData, String> {
    let mut tk = Tokens { lines: text.lines().peekable(), pending: Vec::new().into_iter() };
    tk.header(&["#", "vtk", "DataFile"])?;
    if tk.line()? != MAGIC {
        return Err(format!("missing {MAGIC:?} header"));
    }
    tk.header(&["ASCII"])?;
    tk.header(&["DATASET", "STRUCTURED_POINTS"])?;
    let dims = tk.header(&["DIMENSIONS", "", "", "1"])?;
    let cells_of = |d: &str| parse_usize(d)?.checked_sub(1).ok_or_else(|| format!("bad dimension {d:?}"));
    let (nx, ny) = (cells_of(dims[1])?, cells_of(dims[2])?);
    tk.header(&["ORIGIN"])?;
    tk.header(&["SPACING"])?;
    tk.header(&["FIELD", "FieldData", "5"])?;
    tk.header(&["time", "1", "1", "double"])?;
    let t = tk.values(1)?[0];
    tk.header(&["step", "1", "1", "int"])?;
    let step = parse_usize(tk.line()?.trim())?;
    tk.header(&["extent", "2", "1", "double"])?;
    let ext = tk.values(2)?;
    let grid = Grid::new(nx, ny, ext[0], ext[1]).map_err(|e| e.to_string())?;
    let nu = parse_usize(tk.header(&["u_faces", "1", "", "double"])?[2])?;
    let u = tk.values(nu)?;
    let nv = parse_usize(tk.header(&["v_faces", "1", "", "double"])?[2])?;
    let v = tk.values(nv)?;
    if nu != grid.u_len() || nv != grid.v_len() {
        return Err("face array sizes do not match the grid".into());
    }
    let cells = parse_usize(tk.header(&["CELL_DATA", ""])?[1])?;
    if cells != grid.cells() {
        return Err("CELL_DATA count does not match the grid".into());
    }
    let mut phases = Vec::new();
    let mut rho = None;
    let mut p = None;
    loop {
        let words = tk.header(&[""])?;
        match words.as_slice() {
            ["SCALARS", name, "double", "1"] => {
                tk.header(&["LOOKUP_TABLE", "default"])?;
                let data = tk.values(cells)?;
                match *name {
                    "rho" => rho = Some(data),
                    "p" => p = Some(data),
                    n if n == format!("phi_{}", phases.len()) => phases.push(data),
                    n => return Err(format!("unexpected array {n:?}")),
                }
            }
            ["VECTORS", "v", "double"] => break,
            _ => return Err(format!("unexpected line {:?}", words.join(" "))),
        }
    }
    let (rho, p) = rho.zip(p).ok_or("missing rho or p")?;
    if phases.len() < 2 {
        return Err("need at least two phase arrays".into());
    }
    let n = phases.len();
    let phi = PhaseField::from_flat(grid, n, phases.concat());
    let state = MomentumState {
        v: VectorField::from_parts(grid, u, v),
        rho: ScalarField::from_vec(grid, rho),
        p: ScalarField::from_vec(grid, p),
    };
    Ok(SnapshotData { step, t, phi, state })
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotData> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse(&text).map_err(|m| SimError::parse(path, m))
}
