//! The evolution loop: regions, force, solve with time-step control, vertex
//! update, topology changes and mesh quality, once per step.

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fem::{assemble, control_loop, gather_positions, SolverKind, StepSolution, TimeStepControl};
use crate::quality::{delete_pass, refine_pass, QualityParams};
use crate::region::{init_regions, nodal_force, update_regions_incremental, RegionState, DEFAULT_BAND_WIDTH};
use crate::scalar::Real;
use crate::topo::{detect_and_apply, DetectionParams, EventRecord};
use crate::trimesh::SurfaceSet;
use crate::vec3::Vec3;
use crate::voxel_image::VoxelGrid;

/// Bounds on the normal displacement per step and the step factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    pub dxn_min: f64,
    pub dxn_max: f64,
    pub lambda_t: u32,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            dxn_min: 0.003,
            dxn_max: 0.05,
            lambda_t: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig<T> {
    pub sigma: T,
    pub lambda: T,
    pub tau0: T,
    pub control: ControlConfig,
    pub detection: DetectionParams,
    /// Topology changes are skipped when false.
    pub topology: bool,
    pub quality: Option<QualityParams>,
    pub band_width: usize,
    pub max_steps: usize,
    /// Stop once `δXn < stop_eps` (default `dxn_min`) for `stop_k` steps
    /// that were not limited by `dxn_max`.
    pub stop_eps: Option<T>,
    pub stop_k: usize,
}

impl<T: Real> Default for RunConfig<T> {
    fn default() -> Self {
        RunConfig {
            sigma: T::one(),
            lambda: T::lit(100.0),
            tau0: T::lit(1e-4),
            control: ControlConfig::default(),
            detection: DetectionParams::default(),
            topology: true,
            quality: Some(QualityParams::default()),
            band_width: DEFAULT_BAND_WIDTH,
            max_steps: 1000,
            stop_eps: None,
            stop_k: 10,
        }
    }
}

impl<T: Real> RunConfig<T> {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.sigma > T::zero()) {
            return Err(Error::Param("sigma must be positive".into()));
        }
        if !(self.lambda >= T::zero()) {
            return Err(Error::Param("lambda must be non-negative".into()));
        }
        if !(self.tau0 > T::zero()) {
            return Err(Error::Param("tau0 must be positive".into()));
        }
        if self.band_width == 0 {
            return Err(Error::Param("band_width must be at least 1".into()));
        }
        self.time_control().validate()?;
        if self.topology {
            self.detection.validate()?;
        }
        if let Some(q) = &self.quality {
            q.validate()?;
        }
        Ok(())
    }

    pub fn time_control(&self) -> TimeStepControl<T> {
        TimeStepControl::new(
            T::lit(self.control.dxn_min),
            T::lit(self.control.dxn_max),
            self.control.lambda_t,
            self.tau0,
        )
    }
}

/// Geometry summary of one final surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMetrics {
    pub id: usize,
    pub vertices: usize,
    pub faces: usize,
    pub euler: i64,
    pub genus: Option<i64>,
    pub area: f64,
    pub volume: f64,
    pub centroid: [f64; 3],
}

impl SurfaceMetrics {
    pub fn of<T: Real>(s: &SurfaceSet<T>) -> Vec<SurfaceMetrics> {
        s.meshes()
            .iter()
            .map(|m| SurfaceMetrics {
                id: m.surface_id,
                vertices: m.vertices.len(),
                faces: m.faces.len(),
                euler: m.euler_characteristic(),
                genus: m.genus(),
                area: m.total_area().to_f64_lossy(),
                volume: m.signed_volume().abs().to_f64_lossy(),
                centroid: m.volume_centroid().to_f64(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub steps: usize,
    pub tau: Vec<f64>,
    pub dxn: Vec<f64>,
    pub energy: Vec<f64>,
    pub events: Vec<EventRecord>,
    pub final_surfaces: Vec<SurfaceMetrics>,
    pub stop_reason: String,
}

/// A run that aborted, with the last consistent surfaces and report.
#[derive(Debug)]
pub struct RunFailure<T> {
    pub error: Error,
    pub surfaces: SurfaceSet<T>,
    pub report: RunReport,
}

impl<T> std::fmt::Display for RunFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted after {} steps: {}", self.report.steps, self.error)
    }
}

/// `σ|Γ| + λ Σ_k Σ_{voxels in k} (u0 - c_k)² · voxel volume`.
pub fn energy<T: Real>(g: &VoxelGrid<T>, r: &RegionState<T>, s: &SurfaceSet<T>, sigma: T, lambda: T) -> T {
    let mut fid = T::zero();
    for (u, &l) in g.data().iter().zip(&r.labels) {
        if let Some(c) = r.mean(l as usize) {
            let d = *u - c;
            fid += d * d;
        }
    }
    sigma * s.total_area() + lambda * fid * g.voxel_volume()
}

/// Clamps vertices into the image box; returns how many moved.
fn clamp_to_domain<T: Real>(s: &mut SurfaceSet<T>, g: &VoxelGrid<T>) -> usize {
    let b = g.bounds();
    let mut n = 0;
    for m in s.meshes_mut() {
        for p in &mut m.vertices {
            let q = Vec3::new(
                p[0].max(b.min[0]).min(b.max[0]),
                p[1].max(b.min[1]).min(b.max[1]),
                p[2].max(b.min[2]).min(b.max[2]),
            );
            if q != *p {
                *p = q;
                n += 1;
            }
        }
    }
    n
}

/// Runs the segmentation from `s0`.
pub fn run<T: Real>(
    g: &VoxelGrid<T>,
    s0: SurfaceSet<T>,
    cfg: &RunConfig<T>,
) -> Result<(SurfaceSet<T>, RunReport), Box<RunFailure<T>>> {
    run_observed(g, s0, cfg, |_, _, _| {})
}

/// Like [`run`], calling `observe(step, surfaces, events)` right after every
/// step that changed the topology.
pub fn run_observed<T: Real, F>(
    g: &VoxelGrid<T>,
    s0: SurfaceSet<T>,
    cfg: &RunConfig<T>,
    mut observe: F,
) -> Result<(SurfaceSet<T>, RunReport), Box<RunFailure<T>>>
where
    F: FnMut(usize, &SurfaceSet<T>, &[EventRecord]),
{
    let mut s = s0;
    let mut report = RunReport::default();
    macro_rules! bail {
        ($e:expr) => {{
            let error: Error = $e;
            report.final_surfaces = SurfaceMetrics::of(&s);
            report.stop_reason = format!("error: {error}");
            return Err(Box::new(RunFailure {
                error,
                surfaces: s,
                report,
            }));
        }};
    }
    if let Err(e) = cfg.validate() {
        bail!(e);
    }
    if let Err(e) = s.validate() {
        bail!(Error::from(e));
    }
    let ctl = cfg.time_control();
    let lt = T::from_u32(cfg.control.lambda_t).unwrap();
    let stop_eps = cfg.stop_eps.unwrap_or(ctl.dxn_min);
    let domain = g.bounds();
    let mut tau = cfg.tau0;
    let mut regions: Option<RegionState<T>> = None;
    let mut quiet = 0usize;
    let mut last_energy: Option<T> = None;
    report.stop_reason = "max_steps".into();
    for step in 0..cfg.max_steps {
        // 1. regions and means
        let r = match regions.take() {
            None => init_regions(g, &s),
            Some(mut r) => update_regions_incremental(&mut r, g, &s, cfg.band_width).map(|_| r),
        };
        let r = match r {
            Ok(r) => r,
            Err(e) => bail!(Error::from(e)),
        };
        // 2. force, assembly, solve with step control
        let force = match nodal_force(g, &r, &s, cfg.lambda) {
            Ok(f) => f,
            Err(e) => bail!(Error::from(e)),
        };
        let sys = match assemble(&s, &force, cfg.sigma, tau) {
            Ok(sys) => sys,
            Err(e) => bail!(Error::from(e)),
        };
        let x = gather_positions(&s);
        let outcome = control_loop(tau, &ctl, |t| {
            let sys_t = sys.with_tau(t);
            let sol: StepSolution<T> = sys_t.solve(&x, SolverKind::Pcg)?;
            let dxn = sol.max_normal_displacement(&sys_t);
            Ok((sol, dxn))
        });
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => bail!(e),
        };
        // 3. vertex update
        let mut k = 0;
        for m in s.meshes_mut() {
            for p in &mut m.vertices {
                *p += outcome.solution.dx[k];
                k += 1;
            }
        }
        let clamped = clamp_to_domain(&mut s, g);
        if clamped > 0 {
            warn!("step {step}: {clamped} vertices left the image and were clamped");
        }
        tau = outcome.tau;
        report.tau.push(tau.to_f64_lossy());
        report.dxn.push(outcome.dxn.to_f64_lossy());
        // 4. topology changes
        let mut surgery = false;
        if cfg.topology {
            let mut params = cfg.detection.clone();
            if params.adaptive {
                params.a = params.a.max(2.0 * outcome.dxn.to_f64_lossy());
            }
            match detect_and_apply(&mut s, &params, &domain, step) {
                Ok(ev) => {
                    surgery = !ev.is_empty();
                    if surgery {
                        observe(step, &s, &ev);
                    }
                    report.events.extend(ev);
                }
                Err(e) => bail!(e),
            }
        }
        // 5. mesh quality
        if let Some(q) = &cfg.quality {
            for i in 0..s.len() {
                let m = s.mesh_mut(i);
                if let Err(e) = refine_pass(m, q).and_then(|_| delete_pass(m, q)) {
                    bail!(e);
                }
            }
        }
        report.steps = step + 1;
        if surgery {
            tau = tau / lt;
            regions = None;
            let e = match init_regions(g, &s) {
                Ok(r) => energy(g, &r, &s, cfg.sigma, cfg.lambda),
                Err(e) => bail!(Error::from(e)),
            };
            report.energy.push(e.to_f64_lossy());
            last_energy = Some(e);
        } else {
            let mut r = r;
            let e = match update_regions_incremental(&mut r, g, &s, cfg.band_width) {
                Ok(_) => energy(g, &r, &s, cfg.sigma, cfg.lambda),
                Err(e) => bail!(Error::from(e)),
            };
            if let Some(prev) = last_energy {
                if e > prev + T::lit(1e-3) * prev.abs() {
                    info!("step {step}: energy rose from {prev} to {e}");
                }
            }
            report.energy.push(e.to_f64_lossy());
            last_energy = Some(e);
            regions = Some(r);
        }
        debug!(
            "step {step}: tau={} dxn={} attempts={} vertices={} energy={}",
            tau,
            outcome.dxn,
            outcome.attempts.len(),
            s.total_vertices(),
            report.energy.last().copied().unwrap_or(0.0)
        );
        // a step held back by the upper bound is not quiet
        if outcome.dxn < stop_eps && !outcome.straddled {
            quiet += 1;
            if quiet >= cfg.stop_k {
                report.stop_reason = "converged".into();
                break;
            }
        } else {
            quiet = 0;
        }
    }
    report.final_surfaces = SurfaceMetrics::of(&s);
    Ok((s, report))
}
