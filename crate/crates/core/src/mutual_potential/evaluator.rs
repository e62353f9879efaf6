use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::cubature::{point_sums, Buffers, PointCloud, RadialPolynomials, Targets};
use super::poly::SeriesTables;
use super::series::{pair_terms, RadialWeights, Scratch};
use super::{moment, GravityGradients, PotentialError, QTensorSet};
use crate::body_model::PolyhedralBody;

static GLOBAL_EVALUATIONS: AtomicU64 = AtomicU64::new(0);

/// Total gradient evaluations across all evaluators in this process.
pub fn global_evaluation_count() -> u64 {
    GLOBAL_EVALUATIONS.load(Ordering::Relaxed)
}

/// How per-pair contributions are summed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reduction {
    /// One thread, pairs in canonical order.
    Sequential,
    /// Rows of pairs in parallel; row partials summed in canonical order.
    /// Bit-identical to `Sequential` regardless of thread count.
    #[default]
    Deterministic,
    /// Parallel tree reduction; faster but not bit-reproducible.
    Unordered,
}

/// Evaluation strategy. Both give the same truncated series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Kernel {
    /// Each body becomes signed point masses matching its mass moments.
    #[default]
    Cubature,
    /// Direct contraction with the Q tensors per simplex pair.
    QTensor,
}

#[derive(Clone, Debug)]
struct Cloud2 {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    m: Vec<f64>,
}

#[derive(Clone, Debug)]
struct CubatureData {
    cloud1: PointCloud,
    cloud2: Cloud2,
}

#[derive(Clone, Debug)]
struct Simplex {
    verts: Matrix3<f64>,
    /// `ρ T` for the simplex.
    weight: f64,
}

/// Contribution of one simplex pair (already scaled by `-G ρa Ta ρb Tb`).
#[derive(Clone, Copy, Debug)]
pub struct PairContribution {
    pub a: usize,
    pub b: usize,
    pub u: f64,
    pub du_dx: Vector3<f64>,
    /// Contribution to `∂U/∂R` before the final `Aᵀ` product is summed.
    pub du_dr: Matrix3<f64>,
}

#[derive(Clone, Copy)]
struct Partial {
    u: f64,
    du_dx: Vector3<f64>,
    du_dr: Matrix3<f64>,
}

impl Partial {
    fn zero() -> Self {
        Partial {
            u: 0.0,
            du_dx: Vector3::zeros(),
            du_dr: Matrix3::zeros(),
        }
    }

    fn add(mut self, o: &Partial) -> Self {
        self.u += o.u;
        self.du_dx += o.du_dx;
        self.du_dr += o.du_dr;
        self
    }
}

/// Evaluator for a fixed pair of bodies and series order.
///
/// Counts every call to [`MutualPotential::evaluate`] (and
/// [`MutualPotential::potential`]) so integrators can be audited.
#[derive(Debug)]
pub struct MutualPotential {
    g: f64,
    tables: Arc<SeriesTables>,
    kernel: Kernel,
    cubature: Option<Arc<CubatureData>>,
    body1: Vec<Simplex>,
    body2: Vec<Simplex>,
    /// Gram matrices of body-2 simplices (configuration independent).
    gram2: Vec<[[f64; 3]; 3]>,
    convergence_radius: f64,
    reduction: Reduction,
    evaluations: AtomicU64,
    warnings: AtomicU64,
}

impl Clone for MutualPotential {
    fn clone(&self) -> Self {
        MutualPotential {
            g: self.g,
            tables: self.tables.clone(),
            kernel: self.kernel,
            cubature: self.cubature.clone(),
            body1: self.body1.clone(),
            body2: self.body2.clone(),
            gram2: self.gram2.clone(),
            convergence_radius: self.convergence_radius,
            reduction: self.reduction,
            evaluations: AtomicU64::new(0),
            warnings: AtomicU64::new(0),
        }
    }
}

fn simplices(body: &PolyhedralBody) -> Vec<Simplex> {
    body.simplex_vertices
        .iter()
        .zip(&body.jacobians)
        .zip(&body.simplex_density)
        .map(|((v, t), rho)| Simplex {
            verts: *v,
            weight: rho * t,
        })
        .collect()
}

impl MutualPotential {
    pub fn new(
        body1: &PolyhedralBody,
        body2: &PolyhedralBody,
        g: f64,
        q: &QTensorSet,
        order: usize,
    ) -> Result<Self, PotentialError> {
        if order > q.max_order() {
            return Err(PotentialError::OrderTooHigh {
                order,
                max: q.max_order(),
            });
        }
        Self::with_kernel(body1, body2, g, q, order, Kernel::default())
    }

    pub fn with_kernel(
        body1: &PolyhedralBody,
        body2: &PolyhedralBody,
        g: f64,
        q: &QTensorSet,
        order: usize,
        kernel: Kernel,
    ) -> Result<Self, PotentialError> {
        if order > q.max_order() {
            return Err(PotentialError::OrderTooHigh {
                order,
                max: q.max_order(),
            });
        }
        let me = Self::with_tables(body1, body2, g, Arc::new(SeriesTables::new(q, order)));
        Ok(match kernel {
            Kernel::QTensor => me,
            Kernel::Cubature => me.into_cubature(body1, body2, order),
        })
    }

    fn into_cubature(mut self, body1: &PolyhedralBody, body2: &PolyhedralBody, order: usize) -> Self {
        let cloud1 = PointCloud::new(body1, order);
        let c2 = PointCloud::new(body2, order);
        let cloud2 = Cloud2 {
            x: c2.points.iter().map(|p| p.x).collect(),
            y: c2.points.iter().map(|p| p.y).collect(),
            z: c2.points.iter().map(|p| p.z).collect(),
            m: c2.masses,
        };
        self.kernel = Kernel::Cubature;
        self.cubature = Some(Arc::new(CubatureData { cloud1, cloud2 }));
        self
    }

    /// Q-tensor kernel built from tables shared with other evaluators.
    pub fn with_tables(
        body1: &PolyhedralBody,
        body2: &PolyhedralBody,
        g: f64,
        tables: Arc<SeriesTables>,
    ) -> Self {
        let b = simplices(body2);
        let gram2 = b
            .iter()
            .map(|s| {
                let mut m = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] = s.verts.column(i).dot(&s.verts.column(j));
                    }
                }
                m
            })
            .collect();
        MutualPotential {
            g,
            tables,
            kernel: Kernel::QTensor,
            cubature: None,
            body1: simplices(body1),
            body2: b,
            gram2,
            convergence_radius: body1.circumscribing_radius + body2.circumscribing_radius,
            reduction: Reduction::default(),
            evaluations: AtomicU64::new(0),
            warnings: AtomicU64::new(0),
        }
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn reduction(&self) -> Reduction {
        self.reduction
    }

    pub fn order(&self) -> usize {
        self.tables.order
    }

    pub fn gravitational_constant(&self) -> f64 {
        self.g
    }

    pub fn tables(&self) -> &Arc<SeriesTables> {
        &self.tables
    }

    /// Number of simplex pairs.
    pub fn num_pairs(&self) -> usize {
        self.body1.len() * self.body2.len()
    }

    /// Number of independent rows an evaluation is split into: body-1
    /// simplices for the Q-tensor kernel, body-1 points for the cubature
    /// kernel.
    pub fn num_rows(&self) -> usize {
        match (&self.cubature, self.kernel) {
            (Some(c), Kernel::Cubature) => c.cloud1.points.len(),
            _ => self.body1.len(),
        }
    }

    /// Sum of the two circumscribing radii; the series is only trusted beyond it.
    pub fn convergence_radius(&self) -> f64 {
        self.convergence_radius
    }

    /// Number of evaluations performed by this evaluator.
    pub fn evaluation_count(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn reset_evaluation_count(&self) {
        self.evaluations.store(0, Ordering::Relaxed);
    }

    /// Number of evaluations made inside the convergence radius.
    pub fn convergence_warning_count(&self) -> u64 {
        self.warnings.load(Ordering::Relaxed)
    }

    /// Potential only (no gradients). Counts as one evaluation.
    pub fn potential(&self, x: &Vector3<f64>, r: &Matrix3<f64>) -> Result<f64, PotentialError> {
        Ok(self.run(x, r, false, None)?.u)
    }

    /// Potential, both gradients, and the moment in one pass over all pairs.
    pub fn evaluate(&self, x: &Vector3<f64>, r: &Matrix3<f64>) -> Result<GravityGradients, PotentialError> {
        let p = self.run(x, r, true, None)?;
        Ok(GravityGradients {
            u: p.u,
            du_dx: p.du_dx,
            du_dr: p.du_dr,
            moment: moment(&p.du_dr, r),
        })
    }

    /// Deterministic evaluation with rows of pairs processed in the given
    /// order. The result must not depend on the order.
    pub fn evaluate_rows_in_order(
        &self,
        x: &Vector3<f64>,
        r: &Matrix3<f64>,
        rows: &[usize],
    ) -> Result<GravityGradients, PotentialError> {
        let p = self.run(x, r, true, Some(rows))?;
        Ok(GravityGradients {
            u: p.u,
            du_dx: p.du_dx,
            du_dr: p.du_dr,
            moment: moment(&p.du_dr, r),
        })
    }

    fn check(&self, x: &Vector3<f64>) -> Result<f64, PotentialError> {
        let dist = x.norm();
        if !(dist > 0.0) || !dist.is_finite() {
            return Err(PotentialError::SingularConfiguration(dist));
        }
        if dist < self.convergence_radius {
            let previous = self.warnings.fetch_add(1, Ordering::Relaxed);
            if previous == 0 {
                log::warn!(
                    "separation {dist:.6e} is inside the circumscribing-sphere sum {:.6e}; the series may not converge",
                    self.convergence_radius
                );
            }
        }
        Ok(dist)
    }

    fn context(&self, kernel: Kernel, x: &Vector3<f64>, r: &Matrix3<f64>, dist: f64, gradients: bool) -> Context<'_> {
        let wb = match kernel {
            Kernel::QTensor => self
                .body2
                .iter()
                .map(|s| {
                    let w = -(s.verts.transpose() * x);
                    [w.x, w.y, w.z]
                })
                .collect(),
            Kernel::Cubature => Vec::new(),
        };
        let (polys, xq) = match &self.cubature {
            Some(c) if kernel == Kernel::Cubature => {
                let c2 = &c.cloud2;
                let xq = (0..c2.m.len()).map(|l| x.x * c2.x[l] + x.y * c2.y[l] + x.z * c2.z[l]).collect();
                (Some(RadialPolynomials::new(self.order(), dist)), xq)
            }
            _ => (None, Vec::new()),
        };
        Context {
            me: self,
            x: *x,
            r: *r,
            dist,
            weights: RadialWeights::new(&self.tables, dist),
            gradients,
            wb,
            polys,
            xq,
        }
    }

    fn work(&self, kernel: Kernel) -> Work {
        match &self.cubature {
            Some(c) if kernel == Kernel::Cubature => Work::Cubature(Buffers::new(c.cloud2.m.len())),
            _ => Work::Series(Scratch::new(&self.tables)),
        }
    }

    fn run(
        &self,
        x: &Vector3<f64>,
        r: &Matrix3<f64>,
        gradients: bool,
        row_order: Option<&[usize]>,
    ) -> Result<Partial, PotentialError> {
        let dist = self.check(x)?;
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        GLOBAL_EVALUATIONS.fetch_add(1, Ordering::Relaxed);
        let kernel = self.kernel;
        let ctx = self.context(kernel, x, r, dist, gradients);

        let n = self.num_rows();
        if let Some(order) = row_order {
            let mut slots = vec![Partial::zero(); n];
            let computed: Vec<(usize, Partial)> = order
                .par_iter()
                .map_init(|| self.work(kernel), |work, &a| (a, ctx.row(a, work, None)))
                .collect();
            for (a, p) in computed {
                slots[a] = p;
            }
            return Ok(slots.iter().fold(Partial::zero(), |acc, p| acc.add(p)));
        }

        let sequential = match self.reduction {
            Reduction::Sequential => true,
            _ => rayon::current_num_threads() == 1,
        };
        let total = if sequential {
            let mut work = self.work(kernel);
            (0..n).fold(Partial::zero(), |acc, a| acc.add(&ctx.row(a, &mut work, None)))
        } else if self.reduction == Reduction::Deterministic {
            let rows: Vec<Partial> = (0..n)
                .into_par_iter()
                .map_init(|| self.work(kernel), |work, a| ctx.row(a, work, None))
                .collect();
            rows.iter().fold(Partial::zero(), |acc, p| acc.add(p))
        } else {
            (0..n)
                .into_par_iter()
                .map_init(|| self.work(kernel), |work, a| ctx.row(a, work, None))
                .reduce(Partial::zero, |a, b| a.add(&b))
        };
        Ok(total)
    }

    /// Every simplex pair's contribution at `(X, R)` in canonical order,
    /// computed with the Q-tensor kernel.
    pub fn pair_contributions(
        &self,
        x: &Vector3<f64>,
        r: &Matrix3<f64>,
    ) -> Result<Vec<PairContribution>, PotentialError> {
        let dist = self.check(x)?;
        let ctx = self.context(Kernel::QTensor, x, r, dist, true);
        let mut work = self.work(Kernel::QTensor);
        let mut out = Vec::with_capacity(self.num_pairs());
        for a in 0..self.body1.len() {
            ctx.row(a, &mut work, Some(&mut out));
        }
        Ok(out)
    }

    /// Write [`MutualPotential::pair_contributions`] as CSV.
    pub fn dump_pair_contributions<W: Write>(
        &self,
        x: &Vector3<f64>,
        r: &Matrix3<f64>,
        mut out: W,
    ) -> std::io::Result<()> {
        let rows = self
            .pair_contributions(x, r)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
        writeln!(out, "a,b,U,dUdX_x,dUdX_y,dUdX_z")?;
        for p in rows {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                p.a, p.b, p.u, p.du_dx.x, p.du_dx.y, p.du_dx.z
            )?;
        }
        Ok(())
    }
}

enum Work {
    Series(Scratch),
    Cubature(Buffers),
}

struct Context<'a> {
    me: &'a MutualPotential,
    x: Vector3<f64>,
    r: Matrix3<f64>,
    dist: f64,
    weights: RadialWeights,
    gradients: bool,
    wb: Vec<[f64; 3]>,
    polys: Option<RadialPolynomials>,
    xq: Vec<f64>,
}

impl Context<'_> {
    fn row(&self, a: usize, work: &mut Work, record: Option<&mut Vec<PairContribution>>) -> Partial {
        match work {
            Work::Series(scratch) => self.series_row(a, scratch, record),
            Work::Cubature(buf) => self.cubature_row(a, buf),
        }
    }

    /// Sums over all body-2 points for body-1 point `k`.
    fn cubature_row(&self, k: usize, buf: &mut Buffers) -> Partial {
        let me = self.me;
        let data = me.cubature.as_deref().expect("cubature data");
        let polys = self.polys.as_ref().expect("cubature polynomials");
        let c2 = &data.cloud2;
        let targets = Targets { x: &c2.x, y: &c2.y, z: &c2.z, m: &c2.m, xq: &self.xq };
        let p = &data.cloud1.points[k];
        let mu = -me.g * data.cloud1.masses[k];
        let e = self.r * p;
        let s = point_sums(polys, &self.x, &e, &targets, 0..c2.m.len(), buf, self.gradients);
        let mut out = Partial::zero();
        out.u = mu * s.u;
        if self.gradients {
            out.du_dx = (self.x * (s.dr / self.dist) + s.f) * mu;
            out.du_dr = (s.g * mu) * p.transpose();
        }
        out
    }

    /// Sum over all body-2 simplices for body-1 simplex `a`.
    fn series_row(&self, a: usize, scratch: &mut Scratch, mut record: Option<&mut Vec<PairContribution>>) -> Partial {        let me = self.me;
        let tables = &*me.tables;
        let sa = &me.body1[a];
        let ra = self.r * sa.verts;
        let cols_a = [
            ra.column(0).into_owned(),
            ra.column(1).into_owned(),
            ra.column(2).into_owned(),
        ];
        let mut w = [0.0; 6];
        let mut rmat = [[0.0; 6]; 6];
        for i in 0..3 {
            w[i] = cols_a[i].dot(&self.x);
            for j in 0..3 {
                rmat[i][j] = cols_a[i].dot(&cols_a[j]);
            }
        }
        let inv_r = 1.0 / self.dist;

        let mut u = 0.0;
        let mut du_dx = Vector3::zeros();
        // Σ_b weight · [u_0 u_1 u_2], multiplied by Aᵀ at the end.
        let mut cols_sum = Matrix3::zeros();

        for (b, sb) in me.body2.iter().enumerate() {
            w[3..].copy_from_slice(&self.wb[b]);
            let gram = &me.gram2[b];
            for i in 0..3 {
                for j in 0..3 {
                    let c = -cols_a[i].dot(&sb.verts.column(j));
                    rmat[i][3 + j] = c;
                    rmat[3 + j][i] = c;
                    rmat[3 + i][3 + j] = gram[i][j];
                }
            }
            let t = pair_terms(tables, &self.weights, &w, &rmat, scratch, self.gradients);
            let scale = -me.g * sa.weight * sb.weight;
            u += scale * t.u;
            if !self.gradients {
                continue;
            }

            let mut fx = self.x * (t.dudr * inv_r);
            for i in 0..3 {
                fx += cols_a[i] * t.gw[i] - sb.verts.column(i) * t.gw[3 + i];
            }
            let mut cols = Matrix3::zeros();
            for i in 0..3 {
                let mut ui = self.x * t.gw[i];
                for l in 0..3 {
                    ui += cols_a[l] * (2.0 * t.gr[tables.grad_pair_index[i][l]]);
                    ui -= sb.verts.column(l) * (2.0 * t.gr[tables.grad_pair_index[i][3 + l]]);
                }
                cols.set_column(i, &ui);
            }
            du_dx += fx * scale;
            cols_sum += cols * scale;
            if let Some(rec) = record.as_deref_mut() {
                rec.push(PairContribution {
                    a,
                    b,
                    u: scale * t.u,
                    du_dx: fx * scale,
                    du_dr: cols * scale * sa.verts.transpose(),
                });
            }
        }
        Partial {
            u,
            du_dx,
            du_dr: cols_sum * sa.verts.transpose(),
        }
    }
}
