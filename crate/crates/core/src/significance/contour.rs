//! Boundaries of 4-connected regions of a boolean mask.
//!
//! Cell `(scale j, time t)` occupies the unit square `[t, t+1] x [j, j+1]`
//! in lattice coordinates `(time, scale)`. Each boundary is traced
//! counter-clockwise with the region on its left (holes therefore run
//! clockwise), and collinear vertices are merged.

use std::collections::{HashMap, VecDeque};

use ndarray::Array2;

/// A closed polyline; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub vertices: Vec<(usize, usize)>,
}

impl Contour {
    /// Vertices with the first one repeated at the end.
    pub fn closed(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.vertices
            .iter()
            .copied()
            .chain(self.vertices.first().copied())
    }

    /// Signed area by the shoelace formula; positive for outer boundaries.
    pub fn signed_area(&self) -> f64 {
        let v = &self.vertices;
        let mut acc = 0.0;
        for i in 0..v.len() {
            let (x0, y0) = (v[i].0 as f64, v[i].1 as f64);
            let (x1, y1) = {
                let p = v[(i + 1) % v.len()];
                (p.0 as f64, p.1 as f64)
            };
            acc += x0 * y1 - x1 * y0;
        }
        acc / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Dir {
    East,
    North,
    West,
    South,
}

impl Dir {
    fn step(self, (x, y): (usize, usize)) -> (usize, usize) {
        match self {
            Dir::East => (x + 1, y),
            Dir::North => (x, y + 1),
            Dir::West => (x - 1, y),
            Dir::South => (x, y - 1),
        }
    }

    fn left(self) -> Self {
        match self {
            Dir::East => Dir::North,
            Dir::North => Dir::West,
            Dir::West => Dir::South,
            Dir::South => Dir::East,
        }
    }

    fn right(self) -> Self {
        self.left().left().left()
    }
}

/// Traces every region of `mask` (rows = scale, cols = time).
pub fn contour(mask: &Array2<bool>) -> Vec<Contour> {
    let (rows, cols) = mask.dim();
    let on = |j: isize, t: isize| {
        j >= 0
            && t >= 0
            && (j as usize) < rows
            && (t as usize) < cols
            && mask[[j as usize, t as usize]]
    };

    let mut label = Array2::<usize>::zeros((rows, cols));
    let mut contours = Vec::new();
    let mut next = 0;
    for j0 in 0..rows {
        for t0 in 0..cols {
            if !mask[[j0, t0]] || label[[j0, t0]] != 0 {
                continue;
            }
            next += 1;
            let mut cells = Vec::new();
            let mut queue = VecDeque::from([(j0, t0)]);
            label[[j0, t0]] = next;
            while let Some((j, t)) = queue.pop_front() {
                cells.push((j, t));
                let neighbours = [
                    (j.wrapping_sub(1), t),
                    (j + 1, t),
                    (j, t.wrapping_sub(1)),
                    (j, t + 1),
                ];
                for (nj, nt) in neighbours {
                    if nj < rows && nt < cols && mask[[nj, nt]] && label[[nj, nt]] == 0 {
                        label[[nj, nt]] = next;
                        queue.push_back((nj, nt));
                    }
                }
            }
            contours.extend(trace_region(&cells, &on));
        }
    }
    contours
}

fn trace_region(cells: &[(usize, usize)], on: &impl Fn(isize, isize) -> bool) -> Vec<Contour> {
    // Boundary edges keyed by start vertex, region on the left.
    let mut edges: HashMap<(usize, usize), Vec<Dir>> = HashMap::new();
    let mut add = |from: (usize, usize), d: Dir| edges.entry(from).or_default().push(d);
    for &(j, t) in cells {
        let (ji, ti) = (j as isize, t as isize);
        if !on(ji - 1, ti) {
            add((t, j), Dir::East);
        }
        if !on(ji, ti + 1) {
            add((t + 1, j), Dir::North);
        }
        if !on(ji + 1, ti) {
            add((t + 1, j + 1), Dir::West);
        }
        if !on(ji, ti - 1) {
            add((t, j + 1), Dir::South);
        }
    }

    let mut starts: Vec<(usize, usize)> = edges.keys().copied().collect();
    starts.sort_unstable();
    let mut loops = Vec::new();
    for start in starts {
        while let Some(first) = edges.get_mut(&start).and_then(|v| v.pop()) {
            let mut path = vec![(start, first)];
            let mut at = first.step(start);
            let mut heading = first;
            while at != start {
                let out = edges
                    .get_mut(&at)
                    .expect("boundary edges form closed loops");
                // At a pinch vertex prefer hugging the current cell so that
                // diagonal neighbours stay separate.
                let pick = [heading.left(), heading, heading.right()]
                    .into_iter()
                    .find_map(|d| out.iter().position(|&o| o == d))
                    .expect("boundary edges form closed loops");
                let d = out.swap_remove(pick);
                path.push((at, d));
                at = d.step(at);
                heading = d;
            }
            loops.push(simplify(&path));
        }
    }
    loops
}

fn simplify(path: &[((usize, usize), Dir)]) -> Contour {
    let n = path.len();
    let vertices = (0..n)
        .filter(|&i| path[(i + n - 1) % n].1 != path[i].1)
        .map(|i| path[i].0)
        .collect();
    Contour { vertices }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&str]) -> Array2<bool> {
        // First string is the lowest scale row.
        let cols = rows[0].len();
        Array2::from_shape_fn((rows.len(), cols), |(j, t)| rows[j].as_bytes()[t] == b'#')
    }

    #[test]
    fn empty_mask_has_no_contours() {
        assert!(contour(&Array2::from_elem((4, 4), false)).is_empty());
    }

    #[test]
    fn single_cell_is_a_unit_square() {
        let c = contour(&mask(&["...", ".#.", "..."]));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].vertices.len(), 4);
        assert_eq!(c[0].signed_area(), 1.0);
        let mut v = c[0].vertices.clone();
        v.sort_unstable();
        assert_eq!(v, vec![(1, 1), (1, 2), (2, 1), (2, 2)]);
        assert_eq!(c[0].closed().count(), 5);
    }

    #[test]
    fn diagonal_cells_are_separate_regions() {
        let c = contour(&mask(&["#.", ".#"]));
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|c| c.vertices.len() == 4));
    }

    #[test]
    fn rectangle_merges_collinear_edges() {
        let c = contour(&mask(&["###", "###"]));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].vertices.len(), 4);
        assert_eq!(c[0].signed_area(), 6.0);
    }

    #[test]
    fn ring_has_outer_boundary_and_hole() {
        let c = contour(&mask(&["###", "#.#", "###"]));
        assert_eq!(c.len(), 2);
        let mut areas: Vec<f64> = c.iter().map(Contour::signed_area).collect();
        areas.sort_by(f64::total_cmp);
        assert_eq!(areas, vec![-1.0, 9.0]);
    }

    #[test]
    fn pinched_region_is_traced_consistently() {
        // A ring whose hole touches an outer notch diagonally.
        let m = mask(&["####", "#..#", "#.##", "###."]);
        let c = contour(&m);
        let total: f64 = c.iter().map(Contour::signed_area).sum();
        let cells = m.iter().filter(|&&b| b).count() as f64;
        assert_eq!(total, cells);
    }
}
