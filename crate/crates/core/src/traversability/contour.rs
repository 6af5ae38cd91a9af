//! Topological border following (Suzuki–Abe) over a binary mask.
//!
//! Foreground (traversable) pixels are 8-connected, background 4-connected.
//! Both outer borders and hole borders of every foreground component are
//! returned, in raster order of their starting pixels.

use super::TraversabilityMask;

/// Closed chain of border pixels as `(u, v)` = (column, row). A chain may
/// revisit a pixel where the component is one pixel thick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<(usize, usize)>,
    pub is_hole: bool,
}

// Neighbour offsets (drow, dcol), counter-clockwise on screen starting east.
const DIRS: [(isize, isize); 8] = [
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
];
const EAST: usize = 0;
const WEST: usize = 4;

struct Labels {
    stride: usize,
    f: Vec<i32>,
}

impl Labels {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.stride + j
    }

    fn at(&self, i: usize, j: usize) -> i32 {
        self.f[self.idx(i, j)]
    }

    fn step(i: usize, j: usize, d: usize) -> (usize, usize) {
        let (di, dj) = DIRS[d];
        ((i as isize + di) as usize, (j as isize + dj) as usize)
    }

    fn dir_to(from: (usize, usize), to: (usize, usize)) -> usize {
        let di = to.0 as isize - from.0 as isize;
        let dj = to.1 as isize - from.1 as isize;
        DIRS.iter().position(|&d| d == (di, dj)).expect("pixels are 8-adjacent")
    }
}

pub fn extract_contours(mask: &TraversabilityMask) -> Vec<Contour> {
    let (w, h) = (mask.width(), mask.height());
    if w == 0 || h == 0 {
        return Vec::new();
    }
    // one-pixel zero frame so every neighbour access is in range
    let stride = w + 2;
    let mut lab = Labels {
        stride,
        f: vec![0; stride * (h + 2)],
    };
    for v in 0..h {
        for u in 0..w {
            if mask.get(u, v) {
                let k = lab.idx(v + 1, u + 1);
                lab.f[k] = 1;
            }
        }
    }

    let mut nbd = 1;
    let mut out = Vec::new();
    for i in 1..=h {
        for j in 1..=w {
            let fij = lab.at(i, j);
            if fij == 0 {
                continue;
            }
            let (start_dir, is_hole) = if fij == 1 && lab.at(i, j - 1) == 0 {
                (WEST, false)
            } else if fij >= 1 && lab.at(i, j + 1) == 0 {
                (EAST, true)
            } else {
                continue;
            };
            nbd += 1;
            let points = follow_border(&mut lab, i, j, start_dir, nbd);
            out.push(Contour {
                points: points.into_iter().map(|(i, j)| (j - 1, i - 1)).collect(),
                is_hole,
            });
        }
    }
    out
}

fn follow_border(lab: &mut Labels, i: usize, j: usize, start_dir: usize, nbd: i32) -> Vec<(usize, usize)> {
    let origin = (i, j);
    // clockwise search for the first non-zero neighbour
    let first = (0..8)
        .map(|k| (start_dir + 8 - k) % 8)
        .map(|d| Labels::step(i, j, d))
        .find(|&(a, b)| lab.at(a, b) != 0);
    let Some(p1) = first else {
        let k = lab.idx(i, j);
        lab.f[k] = -nbd;
        return vec![origin];
    };

    let mut points = Vec::new();
    let mut p2 = p1;
    let mut p3 = origin;
    loop {
        let back = Labels::dir_to(p3, p2);
        let mut east_zero = false;
        let mut p4 = p2;
        for k in 1..=8 {
            let d = (back + k) % 8;
            let q = Labels::step(p3.0, p3.1, d);
            if lab.at(q.0, q.1) != 0 {
                p4 = q;
                break;
            }
            if d == EAST {
                east_zero = true;
            }
        }
        let k3 = lab.idx(p3.0, p3.1);
        if east_zero {
            lab.f[k3] = -nbd;
        } else if lab.f[k3] == 1 {
            lab.f[k3] = nbd;
        }
        points.push(p3);
        if p4 == origin && p3 == p1 {
            break;
        }
        p2 = p3;
        p3 = p4;
    }
    points
}
