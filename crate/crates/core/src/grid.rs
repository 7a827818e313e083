//! Dense grids indexed by position. Region and sector identifiers are opaque
//! strings resolved to indices once at load; every numeric grid is a flat
//! `Vec<f64>` with explicit index arithmetic.
//!
//! JSON serialization uses nested arrays (region-major) so the documents stay
//! human-diffable.

use serde::{Deserialize, Serialize};

/// Region × sector grid, region-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct RsGrid {
    regions: usize,
    sectors: usize,
    data: Vec<f64>,
}

impl RsGrid {
    pub fn zeros(regions: usize, sectors: usize) -> Self {
        Self {
            regions,
            sectors,
            data: vec![0.0; regions * sectors],
        }
    }

    pub fn filled(regions: usize, sectors: usize, value: f64) -> Self {
        Self {
            regions,
            sectors,
            data: vec![value; regions * sectors],
        }
    }

    pub fn from_fn(regions: usize, sectors: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut g = Self::zeros(regions, sectors);
        for d in 0..regions {
            for i in 0..sectors {
                g.data[d * sectors + i] = f(d, i);
            }
        }
        g
    }

    #[inline]
    pub fn get(&self, region: usize, sector: usize) -> f64 {
        self.data[region * self.sectors + sector]
    }

    #[inline]
    pub fn set(&mut self, region: usize, sector: usize, value: f64) {
        self.data[region * self.sectors + sector] = value;
    }

    /// All sectors of one region as a contiguous slice.
    #[inline]
    pub fn row(&self, region: usize) -> &[f64] {
        &self.data[region * self.sectors..(region + 1) * self.sectors]
    }

    pub fn regions(&self) -> usize {
        self.regions
    }

    pub fn sectors(&self) -> usize {
        self.sectors
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        let sectors = self.sectors;
        self.data
            .iter()
            .enumerate()
            .map(move |(k, &v)| ((k / sectors, k % sectors), v))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            regions: self.regions,
            sectors: self.sectors,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_rel_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1e-300))
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for RsGrid {
    type Error = String;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, String> {
        let regions = rows.len();
        let sectors = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != sectors) {
            return Err("ragged region-sector grid".into());
        }
        Ok(Self {
            regions,
            sectors,
            data: rows.into_iter().flatten().collect(),
        })
    }
}

impl From<RsGrid> for Vec<Vec<f64>> {
    fn from(g: RsGrid) -> Self {
        g.data
            .chunks(g.sectors.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }
}

/// Source × destination × sector grid (trade costs, tariffs, trade shares).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct BilateralGrid {
    regions: usize,
    sectors: usize,
    data: Vec<f64>,
}

impl BilateralGrid {
    pub fn zeros(regions: usize, sectors: usize) -> Self {
        Self {
            regions,
            sectors,
            data: vec![0.0; regions * regions * sectors],
        }
    }

    pub fn filled(regions: usize, sectors: usize, value: f64) -> Self {
        Self {
            regions,
            sectors,
            data: vec![value; regions * regions * sectors],
        }
    }

    pub fn from_fn(
        regions: usize,
        sectors: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut g = Self::zeros(regions, sectors);
        for s in 0..regions {
            for d in 0..regions {
                for i in 0..sectors {
                    g.data[(s * regions + d) * sectors + i] = f(s, d, i);
                }
            }
        }
        g
    }

    #[inline]
    pub fn get(&self, source: usize, dest: usize, sector: usize) -> f64 {
        self.data[(source * self.regions + dest) * self.sectors + sector]
    }

    #[inline]
    pub fn set(&mut self, source: usize, dest: usize, sector: usize, value: f64) {
        self.data[(source * self.regions + dest) * self.sectors + sector] = value;
    }

    pub fn regions(&self) -> usize {
        self.regions
    }

    pub fn sectors(&self) -> usize {
        self.sectors
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            regions: self.regions,
            sectors: self.sectors,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        let (r, i) = (self.regions, self.sectors);
        self.data
            .iter()
            .enumerate()
            .map(move |(k, &v)| ((k / (r * i), (k / i) % r, k % i), v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for BilateralGrid {
    type Error = String;
    fn try_from(v: Vec<Vec<Vec<f64>>>) -> Result<Self, String> {
        let regions = v.len();
        let sectors = v.first().and_then(|d| d.first()).map_or(0, Vec::len);
        let mut data = Vec::with_capacity(regions * regions * sectors);
        for by_dest in &v {
            if by_dest.len() != regions {
                return Err("bilateral grid is not square in regions".into());
            }
            for cell in by_dest {
                if cell.len() != sectors {
                    return Err("ragged bilateral grid".into());
                }
                data.extend_from_slice(cell);
            }
        }
        Ok(Self {
            regions,
            sectors,
            data,
        })
    }
}

impl From<BilateralGrid> for Vec<Vec<Vec<f64>>> {
    fn from(g: BilateralGrid) -> Self {
        (0..g.regions)
            .map(|s| {
                (0..g.regions)
                    .map(|d| (0..g.sectors).map(|i| g.get(s, d, i)).collect())
                    .collect()
            })
            .collect()
    }
}

/// Region × using-sector × supplying-sector grid (input-output structure).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct IoGrid {
    regions: usize,
    sectors: usize,
    data: Vec<f64>,
}

impl IoGrid {
    pub fn zeros(regions: usize, sectors: usize) -> Self {
        Self {
            regions,
            sectors,
            data: vec![0.0; regions * sectors * sectors],
        }
    }

    pub fn from_fn(
        regions: usize,
        sectors: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut g = Self::zeros(regions, sectors);
        for d in 0..regions {
            for i in 0..sectors {
                for j in 0..sectors {
                    g.data[(d * sectors + i) * sectors + j] = f(d, i, j);
                }
            }
        }
        g
    }

    #[inline]
    pub fn get(&self, region: usize, using: usize, supplying: usize) -> f64 {
        self.data[(region * self.sectors + using) * self.sectors + supplying]
    }

    #[inline]
    pub fn set(&mut self, region: usize, using: usize, supplying: usize, value: f64) {
        self.data[(region * self.sectors + using) * self.sectors + supplying] = value;
    }

    /// Supplying-sector shares for one (region, using-sector) pair.
    #[inline]
    pub fn row(&self, region: usize, using: usize) -> &[f64] {
        let base = (region * self.sectors + using) * self.sectors;
        &self.data[base..base + self.sectors]
    }

    pub fn regions(&self) -> usize {
        self.regions
    }

    pub fn sectors(&self) -> usize {
        self.sectors
    }
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for IoGrid {
    type Error = String;
    fn try_from(v: Vec<Vec<Vec<f64>>>) -> Result<Self, String> {
        let regions = v.len();
        let sectors = v.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(regions * sectors * sectors);
        for by_using in &v {
            if by_using.len() != sectors {
                return Err("input-output grid is not square in sectors".into());
            }
            for row in by_using {
                if row.len() != sectors {
                    return Err("ragged input-output grid".into());
                }
                data.extend_from_slice(row);
            }
        }
        Ok(Self {
            regions,
            sectors,
            data,
        })
    }
}

impl From<IoGrid> for Vec<Vec<Vec<f64>>> {
    fn from(g: IoGrid) -> Self {
        (0..g.regions)
            .map(|d| (0..g.sectors).map(|i| g.row(d, i).to_vec()).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rs_grid_round_trips_through_nested_vecs() {
        let g = RsGrid::from_fn(2, 3, |d, i| (d * 10 + i) as f64);
        let nested: Vec<Vec<f64>> = g.clone().into();
        assert_eq!(nested, vec![vec![0.0, 1.0, 2.0], vec![10.0, 11.0, 12.0]]);
        assert_eq!(RsGrid::try_from(nested).unwrap(), g);
    }

    #[test]
    fn bilateral_indexing_matches_from_fn() {
        let g = BilateralGrid::from_fn(3, 2, |s, d, i| (100 * s + 10 * d + i) as f64);
        assert_eq!(g.get(2, 1, 1), 211.0);
        let nested: Vec<Vec<Vec<f64>>> = g.clone().into();
        assert_eq!(BilateralGrid::try_from(nested).unwrap(), g);
    }

    #[test]
    fn ragged_grids_are_rejected() {
        assert!(RsGrid::try_from(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
