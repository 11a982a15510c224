//! Sampling grids for functional data.
//!
//! A 1-D grid is an increasing list of locations. A 2-D grid is a
//! rectangular lattice; its values are stored row-major over `(x, y)`, so the
//! lattice point `(ix, iy)` lives at flat index `ix * ny + iy`.

use serde::Serialize;

use crate::error::{Result, ScbError};

fn check_increasing(points: &[f64], what: &str) -> Result<()> {
    if points.is_empty() {
        return Err(ScbError::InvalidGrid(format!("{what} is empty")));
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(ScbError::InvalidGrid(format!("{what}[{i}] is not finite")));
    }
    if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
        return Err(ScbError::InvalidGrid(format!(
            "{what} is not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

/// Trapezoid quadrature weights for a (possibly non-uniform) increasing grid.
pub fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let n = points.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let half = 0.5 * (points[i + 1] - points[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

/// `n` equidistant points from `a` to `b`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
                .collect()
        }
    }
}

/// Midpoint design `s_p = (p - 0.5) / P` on `[0, 1]`.
pub fn midpoints(n: usize) -> Vec<f64> {
    (1..=n).map(|p| (p as f64 - 0.5) / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid1D {
    points: Vec<f64>,
}

impl Grid1D {
    /// Strictly increasing, finite locations. Operations that differentiate
    /// (gradients, LKCs) additionally require at least three points.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        check_increasing(&points, "grid")?;
        Ok(Self { points })
    }

    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(linspace(a, b, n))
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.points)
    }

    /// Length of the covered interval.
    pub fn extent(&self) -> f64 {
        self.points[self.points.len() - 1] - self.points[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid2D {
    x: Vec<f64>,
    y: Vec<f64>,
    boundary: Vec<(usize, usize)>,
}

impl Grid2D {
    /// Rectangular lattice whose boundary is the full rectangle, traversed
    /// counter-clockwise from `(0, 0)`.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::check_axes(&x, &y)?;
        let boundary = rectangle_boundary(x.len(), y.len());
        Ok(Self { x, y, boundary })
    }

    /// Lattice with a custom boundary polyline (cyclic list of lattice
    /// indices, consecutive vertices lattice-adjacent).
    pub fn with_boundary(x: Vec<f64>, y: Vec<f64>, boundary: Vec<(usize, usize)>) -> Result<Self> {
        Self::check_axes(&x, &y)?;
        validate_boundary(&boundary, x.len(), y.len())?;
        Ok(Self { x, y, boundary })
    }

    fn check_axes(x: &[f64], y: &[f64]) -> Result<()> {
        check_increasing(x, "x axis")?;
        check_increasing(y, "y axis")?;
        for (axis, len) in [(0, x.len()), (1, y.len())] {
            if len < 3 {
                return Err(ScbError::GridTooShort { axis, len, needed: 3 });
            }
        }
        Ok(())
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn boundary(&self) -> &[(usize, usize)] {
        &self.boundary
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.y.len() + iy
    }

    /// Tensor-product trapezoid weights in storage order.
    pub fn weights(&self) -> Vec<f64> {
        let wx = trapezoid_weights(&self.x);
        let wy = trapezoid_weights(&self.y);
        wx.iter()
            .flat_map(|a| wy.iter().map(move |b| a * b))
            .collect()
    }
}

/// Counter-clockwise boundary of an `nx` by `ny` lattice.
pub fn rectangle_boundary(nx: usize, ny: usize) -> Vec<(usize, usize)> {
    let mut b = Vec::with_capacity(2 * (nx + ny));
    for ix in 0..nx - 1 {
        b.push((ix, 0));
    }
    for iy in 0..ny - 1 {
        b.push((nx - 1, iy));
    }
    for ix in (1..nx).rev() {
        b.push((ix, ny - 1));
    }
    for iy in (1..ny).rev() {
        b.push((0, iy));
    }
    b
}

pub(crate) fn validate_boundary(boundary: &[(usize, usize)], nx: usize, ny: usize) -> Result<()> {
    if boundary.len() < 4 {
        return Err(ScbError::InvalidGrid(
            "boundary needs at least four vertices".into(),
        ));
    }
    if let Some(&(ix, iy)) = boundary.iter().find(|&&(ix, iy)| ix >= nx || iy >= ny) {
        return Err(ScbError::InvalidGrid(format!(
            "boundary vertex ({ix}, {iy}) outside the lattice"
        )));
    }
    let adjacent = |a: (usize, usize), b: (usize, usize)| a.0.abs_diff(b.0) + a.1.abs_diff(b.1) == 1;
    for (k, w) in boundary.windows(2).enumerate() {
        if !adjacent(w[0], w[1]) {
            return Err(ScbError::InvalidGrid(format!(
                "boundary vertices {k} and {} are not lattice-adjacent",
                k + 1
            )));
        }
    }
    if !adjacent(boundary[boundary.len() - 1], boundary[0]) {
        return Err(ScbError::InvalidGrid("boundary is not closed".into()));
    }
    let mut seen = boundary.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(ScbError::InvalidGrid(
            "boundary visits a vertex twice".into(),
        ));
    }
    Ok(())
}

/// Grid of a functional sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Grid {
    One(Grid1D),
    Two(Grid2D),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::One(g) => g.len(),
            Grid::Two(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Grid::One(_) => 1,
            Grid::Two(_) => 2,
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        match self {
            Grid::One(g) => g.weights(),
            Grid::Two(g) => g.weights(),
        }
    }

    pub fn as_1d(&self) -> Option<&Grid1D> {
        match self {
            Grid::One(g) => Some(g),
            Grid::Two(_) => None,
        }
    }

    pub fn as_2d(&self) -> Option<&Grid2D> {
        match self {
            Grid::Two(g) => Some(g),
            Grid::One(_) => None,
        }
    }
}

impl From<Grid1D> for Grid {
    fn from(g: Grid1D) -> Self {
        Grid::One(g)
    }
}

impl From<Grid2D> for Grid {
    fn from(g: Grid2D) -> Self {
        Grid::Two(g)
    }
}
