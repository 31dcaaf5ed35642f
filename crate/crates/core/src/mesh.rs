//! Embedded periodic grids on the unit torus and gridded field storage.
//!
//! Level `m = 1..=M` has `N_m = 2^(m-1) (2^(m0+1) - 1)` nodes per side at
//! `x_j = j / N_m`, `j = 0..N_m-1`. Node `j` of level `m` coincides with node
//! `2^(m'-m) j` of any finer level `m'`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

const MAGIC: &[u8; 4] = b"KHE1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshHierarchy {
    m0: u32,
    levels: u32,
}

impl MeshHierarchy {
    pub fn new(m0: i64, levels: i64) -> Result<Self> {
        if m0 < 0 {
            return Err(Error::Config(format!("m0 must be >= 0, got {m0}")));
        }
        if levels < 1 {
            return Err(Error::Config(format!(
                "need at least one level, got {levels}"
            )));
        }
        if m0 + levels > 40 {
            return Err(Error::Config("hierarchy too large".into()));
        }
        Ok(Self {
            m0: m0 as u32,
            levels: levels as u32,
        })
    }

    pub fn m0(&self) -> u32 {
        self.m0
    }

    /// Number of levels `M`.
    pub fn levels(&self) -> usize {
        self.levels as usize
    }

    /// Nodes per side on level `m` (1-based).
    pub fn n(&self, level: usize) -> usize {
        assert!(level >= 1, "levels are 1-based");
        (1usize << (level - 1)) * ((1usize << (self.m0 + 1)) - 1)
    }

    pub fn sizes(&self) -> Vec<usize> {
        (1..=self.levels()).map(|m| self.n(m)).collect()
    }

    pub fn spacing(&self, level: usize) -> f64 {
        1.0 / self.n(level) as f64
    }

    pub fn coordinate(&self, level: usize, j: usize) -> f64 {
        j as f64 / self.n(level) as f64
    }

    pub fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.levels() {
            return Err(Error::HierarchyMismatch(format!(
                "level {level} not in 1..={}",
                self.levels
            )));
        }
        Ok(())
    }

    /// The same base grid truncated (or extended) to `levels` levels.
    pub fn with_levels(&self, levels: usize) -> Result<Self> {
        Self::new(self.m0 as i64, levels as i64)
    }

    /// Level whose side length is `n`, if any.
    pub fn level_of(&self, n: usize) -> Option<usize> {
        (1..=self.levels()).find(|&m| self.n(m) == n)
    }
}

/// Index on level `to` of node `j` of level `from` (`to >= from`).
pub fn coincident_index(j: usize, from: usize, to: usize) -> usize {
    assert!(to >= from, "target level must not be coarser");
    j << (to - from)
}

/// Named node arrays on one `n x n` periodic grid, row-major with `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub level: usize,
    pub n: usize,
    names: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl GridField {
    pub fn new(level: usize, n: usize) -> Self {
        Self {
            level,
            n,
            names: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn with_component(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.insert(name, values)?;
        Ok(self)
    }

    /// Adds or replaces a component.
    pub fn insert(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.n * self.n {
            return Err(Error::Shape(format!(
                "component {name} has {} values, grid needs {}",
                values.len(),
                self.n * self.n
            )));
        }
        if !name.is_ascii() || name.is_empty() {
            return Err(Error::Format(format!(
                "component name {name:?} must be ASCII"
            )));
        }
        match self.names.iter().position(|n| n == name) {
            Some(i) => self.data[i] = values,
            None => {
                self.names.push(name.to_string());
                self.data.push(values);
            }
        }
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn component(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.component(name)
            .ok_or_else(|| Error::Shape(format!("missing component {name}")))
    }

    pub fn components(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .zip(&self.data)
            .map(|(n, d)| (n.as_str(), d.as_slice()))
    }

    /// Value at `(j, k)` with periodic wrap.
    pub fn get(&self, name: &str, j: isize, k: isize) -> Option<f64> {
        let n = self.n as isize;
        let c = self.component(name)?;
        Some(c[(k.rem_euclid(n) * n + j.rem_euclid(n)) as usize])
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.level as u32).to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.names.len() as u32).to_le_bytes())?;
        for name in &self.names {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.n * self.n * 8);
        for comp in &self.data {
            buf.clear();
            for v in comp {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic, expected KHE1".into()));
        }
        let level = read_u32(&mut r)? as usize;
        let n = read_u32(&mut r)? as usize;
        let count = read_u32(&mut r)? as usize;
        let mut names = Vec::with_capacity(count);
        for _ in 0..count {
            let len = read_u32(&mut r)? as usize;
            if len > 4096 {
                return Err(Error::Format("component name too long".into()));
            }
            let mut bytes = vec![0u8; len];
            r.read_exact(&mut bytes)?;
            let name = String::from_utf8(bytes)
                .ok()
                .filter(|s| s.is_ascii())
                .ok_or_else(|| Error::Format("component name is not ASCII".into()))?;
            names.push(name);
        }
        let mut field = GridField::new(level, n);
        let mut bytes = vec![0u8; n * n * 8];
        for name in names {
            r.read_exact(&mut bytes)?;
            let values = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            field.insert(&name, values)?;
        }
        Ok(field)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_binary(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_binary(std::io::BufReader::new(file))
    }

    /// `x,y,value` rows for one component.
    pub fn write_csv<W: Write>(&self, name: &str, mut w: W) -> Result<()> {
        let values = self.require(name)?;
        writeln!(w, "x,y,{name}")?;
        let h = 1.0 / self.n as f64;
        for k in 0..self.n {
            for j in 0..self.n {
                writeln!(
                    w,
                    "{},{},{:e}",
                    j as f64 * h,
                    k as f64 * h,
                    values[k * self.n + j]
                )?;
            }
        }
        Ok(())
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Conserved variables `(rho, m_x, m_y, E)` per node of one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedField {
    pub level: usize,
    pub n: usize,
    pub cells: Vec<[f64; 4]>,
}

pub const CONSERVED_NAMES: [&str; 4] = ["rho", "mx", "my", "E"];

impl ConservedField {
    pub fn uniform(level: usize, n: usize, state: [f64; 4]) -> Self {
        Self {
            level,
            n,
            cells: vec![state; n * n],
        }
    }

    pub fn from_fn(level: usize, n: usize, mut f: impl FnMut(f64, f64) -> [f64; 4]) -> Self {
        let h = 1.0 / n as f64;
        let mut cells = Vec::with_capacity(n * n);
        for k in 0..n {
            for j in 0..n {
                cells.push(f(j as f64 * h, k as f64 * h));
            }
        }
        Self { level, n, cells }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.cells.iter().map(|u| u[c]).collect()
    }

    /// Grid-weighted totals of each conserved component.
    pub fn totals(&self) -> [f64; 4] {
        let w = self.spacing() * self.spacing();
        let mut out = [0.0; 4];
        for (c, o) in out.iter_mut().enumerate() {
            *o = pairwise_sum(&self.component(c)) * w;
        }
        out
    }

    pub fn to_grid_field(&self) -> GridField {
        let mut g = GridField::new(self.level, self.n);
        for (c, name) in CONSERVED_NAMES.iter().enumerate() {
            g.insert(name, self.component(c))
                .expect("shape is consistent");
        }
        g
    }

    pub fn from_grid_field(g: &GridField) -> Result<Self> {
        let comps: Vec<&[f64]> = CONSERVED_NAMES
            .iter()
            .map(|n| g.require(n))
            .collect::<Result<_>>()?;
        let cells = (0..g.n * g.n)
            .map(|i| [comps[0][i], comps[1][i], comps[2][i], comps[3][i]])
            .collect();
        Ok(Self {
            level: g.level,
            n: g.n,
            cells,
        })
    }
}

/// Grid-weighted discrete L1 norm `sum |v| dx dy` on an `n x n` torus grid.
pub fn l1_norm(values: &[f64], n: usize) -> Result<f64> {
    if values.len() != n * n {
        return Err(Error::Shape(format!(
            "expected {} values, got {}",
            n * n,
            values.len()
        )));
    }
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let h = 1.0 / n as f64;
    Ok(pairwise_sum(&abs) * h * h)
}

/// Copies the nodes of a fine field that coincide with the nodes of `coarse_n`.
pub fn restrict_to_coincident(values: &[f64], fine_n: usize, coarse_n: usize) -> Result<Vec<f64>> {
    if values.len() != fine_n * fine_n || coarse_n == 0 || fine_n % coarse_n != 0 {
        return Err(Error::Shape(format!(
            "cannot restrict {fine_n}x{fine_n} grid to {coarse_n}x{coarse_n}"
        )));
    }
    let r = fine_n / coarse_n;
    Ok((0..coarse_n)
        .flat_map(|k| (0..coarse_n).map(move |j| values[k * r * fine_n + j * r]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hierarchy_sizes() {
        assert_eq!(MeshHierarchy::new(0, 3).unwrap().sizes(), vec![1, 2, 4]);
        assert_eq!(
            MeshHierarchy::new(2, 5).unwrap().sizes(),
            vec![7, 14, 28, 56, 112]
        );
        assert_eq!(
            MeshHierarchy::new(4, 5).unwrap().sizes(),
            vec![31, 62, 124, 248, 496]
        );
    }

    #[test]
    fn hierarchy_rejects_bad_parameters() {
        assert!(matches!(MeshHierarchy::new(-1, 3), Err(Error::Config(_))));
        assert!(matches!(MeshHierarchy::new(2, 0), Err(Error::Config(_))));
    }

    #[test]
    fn coincident_indices() {
        assert_eq!(coincident_index(3, 1, 2), 6);
        for to in 1..6 {
            assert_eq!(coincident_index(0, 1, to), 0);
        }
    }

    #[test]
    fn l1_norms_of_simple_fields() {
        for n in [1, 7, 14, 28] {
            assert!((l1_norm(&vec![1.0; n * n], n).unwrap() - 1.0).abs() < 1e-14);
            assert!((l1_norm(&vec![-2.0; n * n], n).unwrap() - 2.0).abs() < 1e-14);
        }
        let n = 8;
        let checker: Vec<f64> = (0..n * n)
            .map(|i| if (i / n + i % n) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        assert_eq!(l1_norm(&checker, n).unwrap(), 1.0);
        assert!(matches!(l1_norm(&[1.0; 5], 2), Err(Error::Shape(_))));
    }

    #[test]
    fn binary_round_trip_preserves_bits() {
        let n = 5;
        let a: Vec<f64> = (0..n * n).map(|i| (i as f64).sin() * 1e-300).collect();
        let b: Vec<f64> = (0..n * n).map(|i| -(i as f64) / 3.0).collect();
        let field = GridField::new(2, n)
            .with_component("rho", a)
            .unwrap()
            .with_component("S", b)
            .unwrap();
        let mut bytes = Vec::new();
        field.write_binary(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"KHE1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 3);
        assert_eq!(&bytes[20..23], b"rho");
        let back = GridField::read_binary(bytes.as_slice()).unwrap();
        assert_eq!(back, field);
    }

    #[test]
    fn binary_reader_rejects_bad_magic() {
        let bytes = b"KHE2\0\0\0\0".to_vec();
        assert!(matches!(
            GridField::read_binary(bytes.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn csv_export_lists_every_node() {
        let field = GridField::new(1, 2)
            .with_component("rho", vec![1.0, 2.0, 3.0, 4.0])
            .unwrap();
        let mut out = Vec::new();
        field.write_csv("rho", &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x,y,rho");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[2], "0.5,0,2e0");
    }

    #[test]
    fn periodic_indexing_wraps() {
        let field = GridField::new(1, 3)
            .with_component("v", (0..9).map(|i| i as f64).collect())
            .unwrap();
        assert_eq!(field.get("v", -1, 0), Some(2.0));
        assert_eq!(field.get("v", 3, 4), Some(3.0));
    }

    proptest! {
        #[test]
        fn nesting_doubles_and_base_is_odd(m0 in 0i64..8, levels in 1i64..6) {
            let h = MeshHierarchy::new(m0, levels).unwrap();
            let base = h.n(1);
            prop_assert_eq!(base % 2, 1);
            for m in 1..h.levels() {
                prop_assert_eq!(h.n(m + 1), 2 * h.n(m));
            }
        }

        #[test]
        fn coincident_nodes_share_coordinates(m0 in 0i64..6, j_frac in 0.0f64..1.0, from in 1usize..4, extra in 0usize..3) {
            let h = MeshHierarchy::new(m0, (from + extra) as i64).unwrap();
            let to = from + extra;
            let j = (j_frac * h.n(from) as f64) as usize % h.n(from);
            prop_assert_eq!(h.coordinate(from, j), h.coordinate(to, coincident_index(j, from, to)));
        }

        #[test]
        fn restriction_recovers_embedded_coarse_values(seed in 0u64..1000) {
            let coarse_n = 7;
            let fine_n = 28;
            let coarse: Vec<f64> = (0..coarse_n * coarse_n).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f64).collect();
            let mut fine = vec![f64::NAN; fine_n * fine_n];
            for k in 0..coarse_n {
                for j in 0..coarse_n {
                    fine[coincident_index(k, 1, 3) * fine_n + coincident_index(j, 1, 3)] = coarse[k * coarse_n + j];
                }
            }
            prop_assert_eq!(restrict_to_coincident(&fine, fine_n, coarse_n).unwrap(), coarse);
        }
    }
}
