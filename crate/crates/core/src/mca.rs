//! Multiple correspondence analysis of an indicator matrix.
//!
//! With `Z` the `N x J` 0/1 indicator of `Q` categorical variables,
//! `P = Z / (NQ)`, row masses `r`, column masses `c`, the analysis takes the
//! SVD of the standardized residuals `S = D_r^{-1/2} (P − r cᵀ) D_c^{-1/2}`.
//! Row principal coordinates are `D_r^{-1/2} U Σ`, category coordinates
//! `D_c^{-1/2} V Σ`, and the principal inertias are `σ²`.

use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;

use crate::linalg::{self, DenseMatrix};
use crate::{numfmt, Error, Result};

/// Categorical values, one row per page and one column per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTable {
    pub variables: Vec<String>,
    pub row_ids: Vec<String>,
    /// `values[row][variable]`.
    pub values: Vec<Vec<String>>,
}

/// Sort order for category labels: numeric labels numerically, everything
/// else lexicographically after them.
pub fn category_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

impl CategoryTable {
    pub fn new(variables: Vec<String>, row_ids: Vec<String>, values: Vec<Vec<String>>) -> Result<Self> {
        if values.len() != row_ids.len() {
            return Err(Error::invalid("one row id per row required"));
        }
        for (id, row) in row_ids.iter().zip(&values) {
            if row.len() != variables.len() {
                return Err(Error::invalid(format!(
                    "row {id} has {} values for {} variables",
                    row.len(),
                    variables.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| v.trim().is_empty()) {
                return Err(Error::invalid(format!(
                    "row {id} is missing a value for `{}`",
                    variables[j]
                )));
            }
        }
        Ok(CategoryTable {
            variables,
            row_ids,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn variable_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::arg(format!("unknown variable `{name}` (have {})", self.variables.join(", "))))
    }

    pub fn column(&self, var: usize) -> impl Iterator<Item = &str> + '_ {
        self.values.iter().map(move |r| r[var].as_str())
    }

    /// Observed categories of a variable in [`category_order`].
    pub fn categories(&self, var: usize) -> Vec<String> {
        let mut cats: Vec<String> = self.column(var).map(str::to_string).collect();
        cats.sort_by(|a, b| category_order(a, b));
        cats.dedup();
        cats
    }

    /// Keeps only the named variables, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<CategoryTable> {
        let idx: Vec<usize> = names.iter().map(|n| self.variable_index(n)).collect::<Result<_>>()?;
        Ok(CategoryTable {
            variables: idx.iter().map(|&i| self.variables[i].clone()).collect(),
            row_ids: self.row_ids.clone(),
            values: self
                .values
                .iter()
                .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
                .collect(),
        })
    }
}

/// A category column of the indicator matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryLabel {
    pub variable: String,
    pub category: String,
}

impl CategoryLabel {
    pub fn name(&self) -> String {
        format!("{}={}", self.variable, self.category)
    }
}

#[derive(Debug, Clone)]
pub struct Indicator {
    pub matrix: DenseMatrix,
    pub columns: Vec<CategoryLabel>,
    pub row_ids: Vec<String>,
    /// Number of variables.
    pub q: usize,
}

/// Builds the `N x J` indicator; columns go variable by variable, categories
/// sorted within each.
pub fn build_indicator(table: &CategoryTable) -> Result<Indicator> {
    if table.variables.is_empty() || table.n_rows() == 0 {
        return Err(Error::invalid("category table is empty"));
    }
    let mut columns = Vec::new();
    let mut offsets = Vec::new();
    let mut cats_per_var = Vec::new();
    for (v, name) in table.variables.iter().enumerate() {
        let cats = table.categories(v);
        if cats.len() < 2 {
            return Err(Error::invalid(format!(
                "variable `{name}` has a single category ({}); it carries no information",
                cats.first().map_or("none", String::as_str)
            )));
        }
        offsets.push(columns.len());
        columns.extend(cats.iter().map(|c| CategoryLabel {
            variable: name.clone(),
            category: c.clone(),
        }));
        cats_per_var.push(cats);
    }
    let mut z = DenseMatrix::zeros(table.n_rows(), columns.len());
    for (i, row) in table.values.iter().enumerate() {
        for (v, value) in row.iter().enumerate() {
            let pos = cats_per_var[v]
                .iter()
                .position(|c| c == value)
                .expect("category collected above");
            z.set(i, offsets[v] + pos, 1.0);
        }
    }
    Ok(Indicator {
        matrix: z,
        columns,
        row_ids: table.row_ids.clone(),
        q: table.variables.len(),
    })
}

#[derive(Debug, Clone)]
pub struct McaModel {
    pub row_ids: Vec<String>,
    pub columns: Vec<CategoryLabel>,
    /// `N x d`.
    pub row_coords: DenseMatrix,
    /// `J x d`.
    pub category_coords: DenseMatrix,
    /// Every positive principal inertia, descending; the first `d` belong to
    /// the retained axes.
    pub principal_inertias: Vec<f64>,
    pub total_inertia: f64,
    pub q: usize,
}

/// Inertias below this fraction of the total are treated as zero.
const NULL_INERTIA: f64 = 1e-12;

pub fn mca_fit(ind: &Indicator, d: usize) -> Result<McaModel> {
    fit(ind, d, true)
}

/// Like [`mca_fit`] but keeps `min(d, positive axes)` dimensions instead of
/// failing when the indicator supports fewer than `d`.
pub fn mca_fit_at_most(ind: &Indicator, d: usize) -> Result<McaModel> {
    fit(ind, d, false)
}

fn fit(ind: &Indicator, d: usize, strict: bool) -> Result<McaModel> {
    if d == 0 {
        return Err(Error::arg("d must be at least 1"));
    }
    let z = &ind.matrix;
    let (n, j) = z.shape();
    let grand = z.as_slice().iter().sum::<f64>();
    if grand == 0.0 {
        return Err(Error::Degenerate("indicator matrix is empty".into()));
    }
    let row_mass: Vec<f64> = (0..n).map(|i| z.row(i).iter().sum::<f64>() / grand).collect();
    let mut col_mass = vec![0.0; j];
    for i in 0..n {
        for (c, &x) in col_mass.iter_mut().zip(z.row(i)) {
            *c += x;
        }
    }
    col_mass.iter_mut().for_each(|c| *c /= grand);

    let mut s = DenseMatrix::zeros(n, j);
    for i in 0..n {
        for c in 0..j {
            let expected = row_mass[i] * col_mass[c];
            s.set(i, c, (z.get(i, c) / grand - expected) / expected.sqrt());
        }
    }
    let total_inertia: f64 = s.as_slice().iter().map(|x| x * x).sum();

    let svd = linalg::truncated_svd(&s, n.min(j), linalg::DEFAULT_TOL, linalg::DEFAULT_MAX_ITER)?;
    let principal_inertias: Vec<f64> = svd
        .s
        .iter()
        .map(|x| x * x)
        .filter(|&l| l > NULL_INERTIA * total_inertia)
        .collect();
    if principal_inertias.is_empty() {
        return Err(Error::Degenerate("indicator matrix has no positive inertia".into()));
    }
    let d = if strict { d } else { d.min(principal_inertias.len()) };
    if d > principal_inertias.len() {
        return Err(Error::arg(format!(
            "requested {d} dimensions but only {} have positive inertia",
            principal_inertias.len()
        )));
    }

    let mut row_coords = DenseMatrix::zeros(n, d);
    for i in 0..n {
        for a in 0..d {
            row_coords.set(i, a, svd.u.get(i, a) * svd.s[a] / row_mass[i].sqrt());
        }
    }
    let mut category_coords = DenseMatrix::zeros(j, d);
    for c in 0..j {
        for a in 0..d {
            category_coords.set(c, a, svd.v.get(c, a) * svd.s[a] / col_mass[c].sqrt());
        }
    }
    Ok(McaModel {
        row_ids: ind.row_ids.clone(),
        columns: ind.columns.clone(),
        row_coords,
        category_coords,
        principal_inertias,
        total_inertia,
        q: ind.q,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub label: CategoryLabel,
    pub distance: f64,
}

impl McaModel {
    pub fn dims(&self) -> usize {
        self.row_coords.cols()
    }

    /// Benzécri-corrected inertias: `(Q/(Q−1) · (λ − 1/Q))²` for `λ > 1/Q`.
    pub fn benzecri_inertias(&self) -> Vec<f64> {
        if self.q < 2 {
            return Vec::new();
        }
        let q = self.q as f64;
        self.principal_inertias
            .iter()
            .filter(|&&l| l > 1.0 / q)
            .map(|&l| (q / (q - 1.0) * (l - 1.0 / q)).powi(2))
            .collect()
    }

    pub fn category_index(&self, variable: &str, category: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.variable == variable && c.category == category)
    }

    /// Every other category point ranked by Euclidean distance in the
    /// retained principal plane; ties keep column order.
    pub fn neighbors(&self, index: usize) -> Vec<Neighbor> {
        let here = self.category_coords.row(index);
        let mut out: Vec<(usize, f64)> = (0..self.columns.len())
            .filter(|&c| c != index)
            .map(|c| {
                let dist = here
                    .iter()
                    .zip(self.category_coords.row(c))
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                (c, dist)
            })
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out.into_iter()
            .map(|(c, distance)| Neighbor {
                label: self.columns[c].clone(),
                distance,
            })
            .collect()
    }

    fn dim_header(&self) -> String {
        (1..=self.dims()).map(|a| format!("dim{a}")).collect::<Vec<_>>().join(",")
    }

    pub fn write_category_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "variable,category,{}", self.dim_header())?;
        for (c, label) in self.columns.iter().enumerate() {
            let coords: Vec<String> = self.category_coords.row(c).iter().map(|&x| numfmt::g12(x)).collect();
            writeln!(w, "{},{},{}", label.variable, label.category, coords.join(","))?;
        }
        Ok(())
    }

    pub fn write_row_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row_id,{}", self.dim_header())?;
        for (i, id) in self.row_ids.iter().enumerate() {
            let coords: Vec<String> = self.row_coords.row(i).iter().map(|&x| numfmt::g12(x)).collect();
            writeln!(w, "{id},{}", coords.join(","))?;
        }
        Ok(())
    }

    /// `dim,inertia,share[,benzecri]` for every positive axis.
    pub fn write_inertia_csv<W: Write>(&self, mut w: W, benzecri: bool) -> std::io::Result<()> {
        let corrected = self.benzecri_inertias();
        let corrected_total: f64 = corrected.iter().sum();
        if benzecri {
            writeln!(w, "dim,inertia,share,benzecri,benzecri_share")?;
        } else {
            writeln!(w, "dim,inertia,share")?;
        }
        for (a, &l) in self.principal_inertias.iter().enumerate() {
            let mut line = format!("{},{},{}", a + 1, numfmt::g12(l), numfmt::g12(l / self.total_inertia));
            if benzecri {
                let (c, share) = corrected
                    .get(a)
                    .map_or((0.0, 0.0), |&c| (c, if corrected_total > 0.0 { c / corrected_total } else { 0.0 }));
                line.push_str(&format!(",{},{}", numfmt::g12(c), numfmt::g12(share)));
            }
            writeln!(w, "{line}")?;
        }
        writeln!(w, "total,{},1", numfmt::g12(self.total_inertia))
    }

    /// `category,rank,neighbor,distance` for the `n` nearest neighbors of
    /// every category point.
    pub fn write_neighbors_csv<W: Write>(&self, mut w: W, n: usize) -> std::io::Result<()> {
        writeln!(w, "category,rank,neighbor,distance")?;
        for (c, label) in self.columns.iter().enumerate() {
            for (rank, nb) in self.neighbors(c).into_iter().take(n).enumerate() {
                writeln!(w, "{},{},{},{}", label.name(), rank + 1, nb.label.name(), numfmt::g12(nb.distance))?;
            }
        }
        Ok(())
    }
}
