//! Exponential last passage percolation on a finite grid.
//!
//! Points are `(row, col)` pairs, 1-based. A path from `u` to `v` moves by
//! unit steps in either coordinate, and the anti-diagonal of `(x, y)` is
//! `t = x + y`.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::cell_exp;

/// Lattice point `(row, col)`, 1-based.
pub type Point = (usize, usize);

const MAGIC: &[u8; 8] = b"LPPWFLD1";

/// Grid of nonnegative vertex weights, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightField {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    seed: Option<u64>,
}

impl WeightField {
    /// i.i.d. Exp(1) weights keyed by `(seed, row, col)`.
    pub fn sample(rows: usize, cols: usize, seed: u64) -> Result<Self> {
        check_dims(rows, cols)?;
        let mut weights = Vec::with_capacity(rows * cols);
        for r in 1..=rows {
            for c in 1..=cols {
                weights.push(cell_exp(seed, r, c));
            }
        }
        Ok(Self { rows, cols, weights, seed: Some(seed) })
    }

    /// User-supplied weights, row-major.
    pub fn from_values(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if weights.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} weights for a {rows}x{cols} field, got {}",
                rows * cols,
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Domain(format!("weight {w} is not a nonnegative finite real")));
        }
        Ok(Self { rows, cols, weights, seed: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_values(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at a 1-based point.
    #[inline]
    pub fn get(&self, p: Point) -> f64 {
        self.weights[(p.0 - 1) * self.cols + (p.1 - 1)]
    }

    /// Copy of the field with one weight replaced; the copy has no seed.
    pub fn with_weight(&self, p: Point, w: f64) -> Result<Self> {
        self.check_point(p)?;
        let mut weights = self.weights.clone();
        weights[(p.0 - 1) * self.cols + (p.1 - 1)] = w;
        Self::from_values(self.rows, self.cols, weights)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.0 >= 1 && p.1 >= 1 && p.0 <= self.rows && p.1 <= self.cols
    }

    fn check_point(&self, p: Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::Range(format!("{p:?} outside the {}x{} field", self.rows, self.cols)))
        }
    }

    fn check_pair(&self, u: Point, v: Point) -> Result<()> {
        self.check_point(u)?;
        self.check_point(v)?;
        if u.0 > v.0 || u.1 > v.1 {
            return Err(Error::Ordering { u, v });
        }
        Ok(())
    }

    pub fn corner(&self) -> Point {
        (self.rows, self.cols)
    }

    /// Binary layout: magic `LPPWFLD1`, `rows` and `cols` as u64, a seed
    /// flag byte, the seed as u64, then row-major f64 payload; all
    /// little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        w.write_all(&[u8::from(self.seed.is_some())])?;
        w.write_all(&self.seed.unwrap_or(0).to_le_bytes())?;
        for x in &self.weights {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Io("not a weight-field file".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let rows = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let cols = u64::from_le_bytes(b8) as usize;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        check_dims(rows, cols)?;
        let mut weights = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            r.read_exact(&mut b8)?;
            weights.push(f64::from_le_bytes(b8));
        }
        let mut f = Self::from_values(rows, cols, weights)?;
        f.seed = (flag[0] != 0).then_some(seed);
        Ok(f)
    }

    /// One CSV line per row, preceded by `# seed=<s>` for sampled fields.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if let Some(s) = self.seed {
            writeln!(w, "# seed={s}")?;
        }
        for row in self.weights.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut seed = None;
        let mut rows = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(s) = rest.trim().strip_prefix("seed=") {
                    seed = Some(s.parse().map_err(|e| Error::Parse { key: "seed".into(), msg: format!("{e}") })?);
                }
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|x| x.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|e| Error::Parse { key: format!("line {}", i + 1), msg: e.to_string() })?);
        }
        let mut f = Self::from_rows(&rows)?;
        f.seed = seed;
        Ok(f)
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("field must be at least 1x1, got {rows}x{cols}")));
    }
    Ok(())
}

/// `T_{u,v}` together with `T'_{u,v} = T_{u,v} - X_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageStat {
    pub value: f64,
    pub truncated_value: f64,
    pub endpoints: (Point, Point),
}

/// Last passage value over a `rows x cols` grid whose weights come from
/// `weight(r, c)` (1-based), in `O(cols)` memory. Returns `(T, X_corner)`.
pub fn last_passage_with<F: FnMut(usize, usize) -> f64>(rows: usize, cols: usize, mut weight: F) -> (f64, f64) {
    let mut t = vec![0.0f64; cols + 1];
    let mut last = 0.0;
    for r in 1..=rows {
        for c in 1..=cols {
            let x = weight(r, c);
            // t[c] still holds row r-1; t[c-1] already holds row r
            let best = if r == 1 {
                t[c - 1]
            } else if c == 1 {
                t[c]
            } else {
                t[c].max(t[c - 1])
            };
            t[c] = x + best;
            last = x;
        }
    }
    (t[cols], last)
}

/// `T_{(1,1),(rows,cols)}` of a fresh Exp(1) field under `seed`, generated
/// cell by cell without storing the field.
pub fn sampled_last_passage(rows: usize, cols: usize, seed: u64) -> PassageStat {
    let (value, x) = last_passage_with(rows, cols, |r, c| cell_exp(seed, r, c));
    PassageStat { value, truncated_value: value - x, endpoints: ((1, 1), (rows, cols)) }
}

pub fn last_passage(field: &WeightField, u: Point, v: Point) -> Result<PassageStat> {
    field.check_pair(u, v)?;
    let (value, x) = last_passage_with(v.0 - u.0 + 1, v.1 - u.1 + 1, |r, c| field.get((u.0 + r - 1, u.1 + c - 1)));
    Ok(PassageStat { value, truncated_value: value - x, endpoints: (u, v) })
}

/// Full table of `T_{u,w}` for `w` in the rectangle `[u, v]`, row-major.
fn passage_table(field: &WeightField, u: Point, v: Point) -> (Vec<f64>, usize) {
    let (h, w) = (v.0 - u.0 + 1, v.1 - u.1 + 1);
    let mut t = vec![0.0f64; h * w];
    for i in 0..h {
        for j in 0..w {
            let x = field.get((u.0 + i, u.1 + j));
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => t[j - 1],
                (_, 0) => t[(i - 1) * w],
                _ => t[(i - 1) * w + j].max(t[i * w + j - 1]),
            };
            t[i * w + j] = x + best;
        }
    }
    (t, w)
}

/// Maximal path with its weight and transversal profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicRecord {
    pub path: Vec<Point>,
    pub weight: f64,
    /// Anti-diagonal index of the first path point.
    pub t_start: usize,
    /// `D(t) = |x(t) - y(t)|` for `t = t_start, t_start + 1, ...`.
    pub profile: Vec<usize>,
    pub max_fluct: usize,
}

impl GeodesicRecord {
    /// `D(t)`, or `None` when `t` is not met by the path.
    pub fn d_at(&self, t: usize) -> Option<usize> {
        t.checked_sub(self.t_start).and_then(|i| self.profile.get(i).copied())
    }
}

/// Geodesic from `u` to `v` by backtracking the full table. On an exact tie
/// the step that decreases the second coordinate is taken.
pub fn geodesic(field: &WeightField, u: Point, v: Point) -> Result<GeodesicRecord> {
    field.check_pair(u, v)?;
    let (t, w) = passage_table(field, u, v);
    let (mut i, mut j) = (v.0 - u.0, v.1 - u.1);
    let mut rev = Vec::with_capacity(i + j + 1);
    rev.push(v);
    while i > 0 || j > 0 {
        if i == 0 || (j > 0 && t[i * w + j - 1] >= t[(i - 1) * w + j]) {
            j -= 1;
        } else {
            i -= 1;
        }
        rev.push((u.0 + i, u.1 + j));
    }
    rev.reverse();
    let weight = t[t.len() - 1];
    let (profile, max_fluct) = profile_of(&rev);
    Ok(GeodesicRecord { t_start: u.0 + u.1, path: rev, weight, profile, max_fluct })
}

/// `T_{(1,1),(rows,cols)}` with its geodesic for a freshly sampled field.
pub fn sampled_geodesic(rows: usize, cols: usize, seed: u64) -> Result<GeodesicRecord> {
    geodesic(&WeightField::sample(rows, cols, seed)?, (1, 1), (rows, cols))
}

fn profile_of(path: &[Point]) -> (Vec<usize>, usize) {
    let profile: Vec<usize> = path.iter().map(|&(x, y)| x.abs_diff(y)).collect();
    let max = profile.iter().copied().max().unwrap_or(0);
    (profile, max)
}

/// Recomputes `D(t)` from the stored path and returns `(profile, max)`.
pub fn transversal_profile(record: &GeodesicRecord) -> (Vec<usize>, usize) {
    profile_of(&record.path)
}

/// `ℓ(Γ(v)) = T_{(1,1),v} + T_{v,(rows,cols)} - X_v`, the best weight among
/// full paths through `v`.
pub fn passage_through(field: &WeightField, v: Point) -> Result<f64> {
    field.check_point(v)?;
    let a = last_passage(field, (1, 1), v)?.value;
    let b = last_passage(field, v, field.corner())?.value;
    Ok(a + b - field.get(v))
}

/// `passage_through` for every vertex at once, row-major, from a forward
/// and a backward table.
pub fn passage_through_all(field: &WeightField) -> Vec<f64> {
    let (rows, cols) = (field.rows, field.cols);
    let (fwd, _) = passage_table(field, (1, 1), field.corner());
    let mut bwd = vec![0.0f64; rows * cols];
    for i in (0..rows).rev() {
        for j in (0..cols).rev() {
            let best = match (i + 1 < rows, j + 1 < cols) {
                (false, false) => 0.0,
                (true, false) => bwd[(i + 1) * cols + j],
                (false, true) => bwd[i * cols + j + 1],
                (true, true) => bwd[(i + 1) * cols + j].max(bwd[i * cols + j + 1]),
            };
            bwd[i * cols + j] = field.weights[i * cols + j] + best;
        }
    }
    fwd.iter().zip(&bwd).zip(&field.weights).map(|((f, b), x)| f + b - x).collect()
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::*;

    /// Every monotone path from `u` to `v`.
    pub fn all_paths(u: Point, v: Point) -> Vec<Vec<Point>> {
        fn rec(p: Point, v: Point, cur: &mut Vec<Point>, out: &mut Vec<Vec<Point>>) {
            cur.push(p);
            if p == v {
                out.push(cur.clone());
            } else {
                if p.0 < v.0 {
                    rec((p.0 + 1, p.1), v, cur, out);
                }
                if p.1 < v.1 {
                    rec((p.0, p.1 + 1), v, cur, out);
                }
            }
            cur.pop();
        }
        let mut out = Vec::new();
        rec(u, v, &mut Vec::new(), &mut out);
        out
    }

    pub fn path_weight(f: &WeightField, p: &[Point]) -> f64 {
        p.iter().map(|&q| f.get(q)).sum()
    }

    pub fn brute_max(f: &WeightField, u: Point, v: Point) -> f64 {
        all_paths(u, v).iter().map(|p| path_weight(f, p)).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use crate::stats::{dkw_epsilon, ks_one_sample};

    fn f22() -> WeightField {
        WeightField::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()
    }

    #[test]
    fn single_vertex() {
        let f = WeightField::from_values(1, 1, vec![2.5]).unwrap();
        let s = last_passage(&f, (1, 1), (1, 1)).unwrap();
        assert_eq!(s.value, 2.5);
        assert_eq!(s.truncated_value, 0.0);
    }

    #[test]
    fn two_by_two() {
        let f = f22();
        let s = last_passage(&f, (1, 1), (2, 2)).unwrap();
        assert_eq!(s.value, 8.0);
        assert_eq!(s.truncated_value, 4.0);
        let g = geodesic(&f, (1, 1), (2, 2)).unwrap();
        assert_eq!(g.path, vec![(1, 1), (2, 1), (2, 2)]);
        assert_eq!(g.profile, vec![0, 1, 0]);
        assert_eq!(g.max_fluct, 1);
        assert_eq!(g.d_at(3), Some(1));
        assert_eq!(g.d_at(5), None);
    }

    #[test]
    fn ties_prefer_decreasing_second_coordinate() {
        let f = WeightField::from_values(2, 2, vec![1.0; 4]).unwrap();
        let g = geodesic(&f, (1, 1), (2, 2)).unwrap();
        assert_eq!(g.path, vec![(1, 1), (2, 1), (2, 2)]);
    }

    #[test]
    fn errors() {
        assert!(matches!(WeightField::sample(0, 3, 1), Err(Error::Dimension(_))));
        let f = f22();
        assert!(matches!(last_passage(&f, (2, 1), (1, 2)), Err(Error::Ordering { .. })));
        assert!(matches!(passage_through(&f, (3, 1)), Err(Error::Range(_))));
        assert!(WeightField::from_values(1, 2, vec![1.0, -1.0]).is_err());
        assert!(WeightField::from_values(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn single_row_is_forced() {
        let f = WeightField::sample(1, 6, 3).unwrap();
        let g = geodesic(&f, (1, 1), (1, 6)).unwrap();
        assert_eq!(g.profile, vec![0, 1, 2, 3, 4, 5]);
        assert!((g.weight - f.weights().iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(WeightField::sample(9, 7, 42).unwrap(), WeightField::sample(9, 7, 42).unwrap());
        assert_ne!(WeightField::sample(9, 7, 42).unwrap(), WeightField::sample(9, 7, 43).unwrap());
    }

    #[test]
    fn single_cell_mean() {
        let n = 1_000_000u64;
        let m: f64 = (0..n).map(|s| WeightField::sample(1, 1, s).unwrap().get((1, 1))).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 0.01);
    }

    #[test]
    fn field_entries_are_exponential() {
        let f = WeightField::sample(50, 50, 2024).unwrap();
        let d = ks_one_sample(f.weights(), |x| 1.0 - (-x).exp());
        assert!(d < dkw_epsilon(2500, 0.01), "{d}");
    }

    #[test]
    fn five_by_five_against_all_paths() {
        let f = WeightField::sample(5, 5, 17).unwrap();
        assert_eq!(all_paths((1, 1), (5, 5)).len(), 70);
        let s = last_passage(&f, (1, 1), (5, 5)).unwrap();
        assert_eq!(s.value, brute_max(&f, (1, 1), (5, 5)));
    }

    #[test]
    fn six_by_six_geodesic() {
        let f = WeightField::sample(6, 6, 5).unwrap();
        let g = geodesic(&f, (1, 1), (6, 6)).unwrap();
        assert_eq!(g.weight, brute_max(&f, (1, 1), (6, 6)));
        assert!(g.path.windows(2).all(|w| {
            let (a, b) = (w[0], w[1]);
            (b.0 == a.0 + 1 && b.1 == a.1) || (b.0 == a.0 && b.1 == a.1 + 1)
        }));
        assert!((path_weight(&f, &g.path) - g.weight).abs() < 1e-12);
        assert_eq!(g.path[0], (1, 1));
        assert_eq!(*g.path.last().unwrap(), (6, 6));
        assert_eq!(g.profile[0], 0);
        assert_eq!(*g.profile.last().unwrap(), 0);
    }

    #[test]
    fn through_point_against_all_paths() {
        let f = WeightField::sample(6, 6, 8).unwrap();
        let want = all_paths((1, 1), (6, 6))
            .iter()
            .filter(|p| p.contains(&(3, 4)))
            .map(|p| path_weight(&f, p))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((passage_through(&f, (3, 4)).unwrap() - want).abs() < 1e-12);
        let t = last_passage(&f, (1, 1), (6, 6)).unwrap().value;
        assert!((passage_through(&f, (6, 6)).unwrap() - t).abs() < 1e-12);
        assert!((passage_through(&f, (1, 1)).unwrap() - t).abs() < 1e-12);
    }

    #[test]
    fn through_point_table_matches_pointwise() {
        let f = WeightField::sample(7, 5, 13).unwrap();
        let all = passage_through_all(&f);
        for r in 1..=7 {
            for c in 1..=5 {
                assert!((all[(r - 1) * 5 + c - 1] - passage_through(&f, (r, c)).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn profile_examples() {
        let stair = GeodesicRecord {
            path: vec![(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)],
            weight: 0.0,
            t_start: 2,
            profile: vec![],
            max_fluct: 0,
        };
        assert_eq!(transversal_profile(&stair), (vec![0, 1, 0, 1, 0], 1));
        let n = 5;
        let mut path: Vec<Point> = (1..=n).map(|c| (1, c)).collect();
        path.extend((2..=n).map(|r| (r, n)));
        let edge = GeodesicRecord { path, ..stair };
        assert_eq!(transversal_profile(&edge).1, n - 1);
        let g = geodesic(&WeightField::sample(8, 8, 99).unwrap(), (1, 1), (8, 8)).unwrap();
        assert_eq!(transversal_profile(&g), (g.profile.clone(), g.max_fluct));
    }

    #[test]
    fn streaming_value_matches_field() {
        let s = sampled_last_passage(9, 11, 77);
        let f = WeightField::sample(9, 11, 77).unwrap();
        let t = last_passage(&f, (1, 1), (9, 11)).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn binary_round_trip() {
        let f = WeightField::sample(4, 3, 12345).unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 8 + 8 + 1 + 8 + 12 * 8);
        assert_eq!(WeightField::read_binary(&buf[..]).unwrap(), f);
        let g = f22();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(WeightField::read_binary(&buf[..]).unwrap(), g);
        assert!(WeightField::read_binary(&b"garbage!........"[..]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let f = WeightField::sample(3, 4, 7).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(WeightField::read_csv(&buf[..]).unwrap(), f);
        assert!(WeightField::read_csv(&b"1,2\n3\n"[..]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn dp_equals_enumeration(rows in 1usize..=7, cols in 1usize..=7, seed in any::<u64>()) {
                let f = WeightField::sample(rows, cols, seed).unwrap();
                let s = last_passage(&f, (1, 1), (rows, cols)).unwrap();
                prop_assert_eq!(s.value, brute_max(&f, (1, 1), (rows, cols)));
                let g = geodesic(&f, (1, 1), (rows, cols)).unwrap();
                prop_assert!((path_weight(&f, &g.path) - s.value).abs() < 1e-12);
            }

            #[test]
            fn monotone_coupling(n in 2usize..12, seed in any::<u64>(), r in 1usize..12, c in 1usize..12, bump in 0.0f64..5.0) {
                let f = WeightField::sample(n, n, seed).unwrap();
                let p = ((r - 1) % n + 1, (c - 1) % n + 1);
                let g = f.with_weight(p, f.get(p) + bump).unwrap();
                let a = last_passage(&f, (1, 1), (n, n)).unwrap().value;
                let b = last_passage(&g, (1, 1), (n, n)).unwrap().value;
                prop_assert!(b >= a);
            }

            #[test]
            fn through_point_bound_and_attainment(n in 2usize..14, seed in any::<u64>()) {
                let f = WeightField::sample(n, n, seed).unwrap();
                let t = last_passage(&f, (1, 1), (n, n)).unwrap().value;
                let all = passage_through_all(&f);
                prop_assert!(all.iter().all(|&x| x <= t + 1e-9));
                let g = geodesic(&f, (1, 1), (n, n)).unwrap();
                for &(x, y) in &g.path {
                    prop_assert!((all[(x - 1) * n + y - 1] - t).abs() < 1e-9);
                }
            }

            #[test]
            fn truncated_subadditivity(n in 2usize..14, seed in any::<u64>(), a in 1usize..14, b in 1usize..14) {
                let f = WeightField::sample(n, n, seed).unwrap();
                let v = ((a - 1) % n + 1, (b - 1) % n + 1);
                let whole = last_passage(&f, (1, 1), (n, n)).unwrap().truncated_value;
                let first = last_passage(&f, (1, 1), v).unwrap().truncated_value;
                let second = last_passage(&f, v, (n, n)).unwrap().truncated_value;
                prop_assert!(whole >= first + second - 1e-9);
            }
        }
    }
}
