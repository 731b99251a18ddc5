use nalgebra::Vector3;

use super::RenderError;

/// Minimum accepted hit distance along a ray.
const T_MIN: f64 = 1e-9;
/// Cap on grid cells; sparse scenes get coarser cells.
const MAX_CELLS: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    /// Unit length.
    pub dir: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Vector3<f64>, dir: Vector3<f64>) -> Self {
        Self { origin, dir }
    }

    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.origin + self.dir * t
    }
}

/// Nearest intersection: ray parameter and sphere index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub id: usize,
}

impl Hit {
    // Smaller t wins; ties go to the lower id.
    fn better_than(&self, other: &Option<Hit>) -> bool {
        match other {
            None => true,
            Some(o) => self.t < o.t || (self.t == o.t && self.id < o.id),
        }
    }
}

/// Smallest root of |o + t d - c|^2 = r^2 above `T_MIN`, for unit `d`.
pub fn intersect_sphere(ray: &Ray, center: &Vector3<f64>, radius: f64) -> Option<f64> {
    let oc = ray.origin - center;
    let b = oc.dot(&ray.dir);
    let c = oc.dot(&oc) - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let near = -b - s;
    if near > T_MIN {
        return Some(near);
    }
    let far = -b + s;
    (far > T_MIN).then_some(far)
}

/// Exhaustive nearest hit over all spheres.
pub fn intersect_brute(centers: &[[f64; 3]], radius: f64, ray: &Ray) -> Option<Hit> {
    let mut best = None;
    for (id, c) in centers.iter().enumerate() {
        if let Some(t) = intersect_sphere(ray, &Vector3::from(*c), radius) {
            let hit = Hit { t, id };
            if hit.better_than(&best) {
                best = Some(hit);
            }
        }
    }
    best
}

/// Uniform grid over equal-radius spheres; each cell lists every sphere
/// whose bounding box touches it (CSR layout).
#[derive(Debug, Clone)]
pub struct AccelGrid {
    radius: f64,
    centers: Vec<Vector3<f64>>,
    lo: Vector3<f64>,
    hi: Vector3<f64>,
    cell: f64,
    dims: [usize; 3],
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl AccelGrid {
    /// Cell size is twice the radius unless the cell budget forces coarser cells.
    pub fn build(centers: &[[f64; 3]], radius: f64) -> Result<Self, RenderError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(RenderError::Radius(radius));
        }
        let centers: Vec<Vector3<f64>> = centers.iter().map(|c| Vector3::from(*c)).collect();
        if centers.is_empty() {
            return Ok(Self {
                radius,
                centers,
                lo: Vector3::zeros(),
                hi: Vector3::zeros(),
                cell: 2.0 * radius,
                dims: [0; 3],
                offsets: vec![0],
                items: Vec::new(),
            });
        }
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for c in &centers {
            lo = lo.inf(c);
            hi = hi.sup(c);
        }
        lo -= Vector3::repeat(radius);
        hi += Vector3::repeat(radius);
        let mut cell = 2.0 * radius;
        let dims = loop {
            let d: [usize; 3] = std::array::from_fn(|a| (((hi[a] - lo[a]) / cell - 1e-9).ceil() as usize).max(1));
            if d.iter().product::<usize>() <= MAX_CELLS.max(centers.len()) {
                break d;
            }
            cell *= 2.0;
        };
        hi = hi.sup(&(lo + Vector3::from_fn(|a, _| dims[a] as f64 * cell)));

        let mut grid = Self {
            radius,
            centers,
            lo,
            hi,
            cell,
            dims,
            offsets: Vec::new(),
            items: Vec::new(),
        };
        let ncells: usize = dims.iter().product();
        let mut counts = vec![0u32; ncells + 1];
        grid.visit_overlaps(|cell, _| counts[cell + 1] += 1);
        for i in 0..ncells {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut items = vec![0u32; counts[ncells] as usize];
        grid.visit_overlaps(|cell, id| {
            items[cursor[cell] as usize] = id as u32;
            cursor[cell] += 1;
        });
        grid.offsets = counts;
        grid.items = items;
        Ok(grid)
    }

    fn visit_overlaps(&self, mut f: impl FnMut(usize, usize)) {
        for (id, c) in self.centers.iter().enumerate() {
            let a = self.cell_coords(&(c - Vector3::repeat(self.radius)));
            let b = self.cell_coords(&(c + Vector3::repeat(self.radius)));
            for z in a[2]..=b[2] {
                for y in a[1]..=b[1] {
                    for x in a[0]..=b[0] {
                        f(self.cell_index([x, y, z]), id);
                    }
                }
            }
        }
    }

    fn cell_coords(&self, p: &Vector3<f64>) -> [usize; 3] {
        std::array::from_fn(|a| {
            let s = ((p[a] - self.lo[a]) / self.cell).floor();
            (s.max(0.0) as usize).min(self.dims[a] - 1)
        })
    }

    fn cell_index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    pub fn num_spheres(&self) -> usize {
        self.centers.len()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn center(&self, id: usize) -> Vector3<f64> {
        self.centers[id]
    }

    /// Sphere indices listed in cell `c`.
    pub fn cell_items(&self, c: [usize; 3]) -> &[u32] {
        let i = self.cell_index(c);
        &self.items[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    /// Cells whose list contains `id`.
    pub fn cells_containing(&self, id: usize) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for z in 0..self.dims[2] {
            for y in 0..self.dims[1] {
                for x in 0..self.dims[0] {
                    if self.cell_items([x, y, z]).contains(&(id as u32)) {
                        out.push([x, y, z]);
                    }
                }
            }
        }
        out
    }

    /// Entry and exit parameters of the ray through the grid box.
    fn clip(&self, ray: &Ray) -> Option<(f64, f64)> {
        let mut t0: f64 = 0.0;
        let mut t1 = f64::INFINITY;
        for a in 0..3 {
            let inv = 1.0 / ray.dir[a];
            let mut ta = (self.lo[a] - ray.origin[a]) * inv;
            let mut tb = (self.hi[a] - ray.origin[a]) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            if ta.is_nan() || tb.is_nan() {
                // parallel to this slab
                if ray.origin[a] < self.lo[a] || ray.origin[a] > self.hi[a] {
                    return None;
                }
                continue;
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
        (t0 <= t1).then_some((t0, t1))
    }

    /// Nearest hit by 3-D DDA traversal; identical to [`intersect_brute`]
    /// including tie-breaking.
    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        if self.centers.is_empty() {
            return None;
        }
        let (t_enter, t_exit) = self.clip(ray)?;
        let mut cell = self.cell_coords(&ray.at(t_enter));
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for a in 0..3 {
            let d = ray.dir[a];
            if d > 0.0 {
                step[a] = 1;
                let boundary = self.lo[a] + (cell[a] + 1) as f64 * self.cell;
                t_max[a] = (boundary - ray.origin[a]) / d;
                t_delta[a] = self.cell / d;
            } else if d < 0.0 {
                step[a] = -1;
                let boundary = self.lo[a] + cell[a] as f64 * self.cell;
                t_max[a] = (boundary - ray.origin[a]) / d;
                t_delta[a] = -self.cell / d;
            }
        }
        let mut best: Option<Hit> = None;
        loop {
            for &id in self.cell_items(cell) {
                let id = id as usize;
                if let Some(t) = intersect_sphere(ray, &self.centers[id], self.radius) {
                    let hit = Hit { t, id };
                    if hit.better_than(&best) {
                        best = Some(hit);
                    }
                }
            }
            let axis = (0..3)
                .min_by(|&a, &b| t_max[a].total_cmp(&t_max[b]))
                .expect("three axes");
            let cell_exit = t_max[axis].min(t_exit);
            if let Some(h) = best {
                if h.t < cell_exit {
                    return best;
                }
            }
            if t_max[axis] > t_exit {
                return best;
            }
            let next = cell[axis] as i64 + step[axis];
            if next < 0 || next >= self.dims[axis] as i64 {
                return best;
            }
            cell[axis] = next as usize;
            t_max[axis] += t_delta[axis];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_root_at_four() {
        let ray = Ray::new(Vector3::zeros(), Vector3::z());
        let t = intersect_sphere(&ray, &Vector3::new(0.0, 0.0, 5.0), 1.0).unwrap();
        assert_eq!(t, 4.0);
        let g = AccelGrid::build(&[[0.0, 0.0, 5.0]], 1.0).unwrap();
        assert_eq!(g.intersect(&ray), Some(Hit { t: 4.0, id: 0 }));
    }

    #[test]
    fn single_sphere_occupies_its_cells() {
        let g = AccelGrid::build(&[[0.3, -0.2, 1.0]], 0.05).unwrap();
        assert_eq!(g.dims(), [1, 1, 1]);
        assert_eq!(g.cells_containing(0), vec![[0, 0, 0]]);
    }

    #[test]
    fn empty_grid_misses() {
        let g = AccelGrid::build(&[], 0.1).unwrap();
        assert!(g.intersect(&Ray::new(Vector3::zeros(), Vector3::x())).is_none());
        assert!(AccelGrid::build(&[], 0.0).is_err());
    }

    #[test]
    fn coincident_spheres_tie_to_lowest_id() {
        let c = [[0.0, 0.0, 3.0]; 4];
        let g = AccelGrid::build(&c, 0.5).unwrap();
        let ray = Ray::new(Vector3::zeros(), Vector3::z());
        assert_eq!(g.intersect(&ray).unwrap().id, 0);
        assert_eq!(intersect_brute(&c, 0.5, &ray).unwrap().id, 0);
    }
}
