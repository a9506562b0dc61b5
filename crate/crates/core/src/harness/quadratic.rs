use std::io::Write;
use std::path::Path;

use super::metrics::fmt_f64;
use crate::error::{Error, Result};
use crate::models::QuadraticModel;
use crate::optim::Optimizer;
use crate::param::ParamVector;

/// One iterate of an optimizer on the ravine quadratic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub x: [f64; 2],
    pub loss: f64,
    /// The update that produced `x` (zero at the start).
    pub delta: [f64; 2],
    pub er: Option<[f64; 2]>,
}

/// Runs `opt` for `iterations` steps from the fixed start. The ER window is never reset.
pub fn quadratic_trajectory(opt: &mut dyn Optimizer, iterations: usize) -> Result<Vec<TrajectoryPoint>> {
    let mut x: ParamVector = QuadraticModel::START.to_vec().into();
    let mut out = Vec::with_capacity(iterations + 1);
    out.push(TrajectoryPoint {
        step: 0,
        x: QuadraticModel::START,
        loss: QuadraticModel::value(&x),
        delta: [0.0; 2],
        er: None,
    });
    for step in 1..=iterations {
        let g: ParamVector = QuadraticModel::gradient(&x).to_vec().into();
        let r = opt.step(&g)?;
        opt.record_step(&r.delta)?;
        x.add_assign(&r.delta)?;
        if let Some(i) = x.first_non_finite() {
            return Err(Error::NonFinite {
                epoch: 1,
                batch: step,
                dimension: Some(i),
                what: "quadratic iterate".into(),
            });
        }
        out.push(TrajectoryPoint {
            step,
            x: [x[0], x[1]],
            loss: QuadraticModel::value(&x),
            delta: [r.delta[0], r.delta[1]],
            er: r.er.as_ref().map(|e| [e[0], e[1]]),
        });
    }
    Ok(out)
}

/// Writes the trajectory as CSV with header `step,x1,x2,loss,dx1,dx2,er1,er2`.
pub fn write_trajectory<W: Write>(points: &[TrajectoryPoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "step,x1,x2,loss,dx1,dx2,er1,er2")?;
    for p in points {
        let (e1, e2) = p.er.map_or((String::new(), String::new()), |e| (fmt_f64(e[0]), fmt_f64(e[1])));
        writeln!(
            w,
            "{},{},{},{},{},{},{e1},{e2}",
            p.step,
            fmt_f64(p.x[0]),
            fmt_f64(p.x[1]),
            fmt_f64(p.loss),
            fmt_f64(p.delta[0]),
            fmt_f64(p.delta[1]),
        )?;
    }
    w.flush()
}

pub fn write_trajectory_csv(points: &[TrajectoryPoint], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectory(points, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{HyperParams, OptimizerInit, OptimizerRegistry, WindowMode};

    #[test]
    fn sgd_iterates_match_closed_form() {
        let reg = OptimizerRegistry::builtin();
        let mut opt = reg
            .build("sgd", HyperParams::default().with_eta(0.01), OptimizerInit::new(2))
            .unwrap();
        let t = quadratic_trajectory(opt.as_mut(), 30).unwrap();
        // x_k - x* = (1 - eta * curvature)^k (x_0 - x*)
        for p in &t {
            let k = p.step as i32;
            let x1 = 3.0 + (1.0f64 - 0.04).powi(k) * -5.0;
            let x2 = 2.0 + (1.0f64 - 0.4).powi(k) * 3.0;
            assert!((p.x[0] - x1).abs() < 1e-12 && (p.x[1] - x2).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_has_one_row_per_iterate() {
        let reg = OptimizerRegistry::builtin();
        let mut opt = reg
            .build("adasmooth", HyperParams::default(), OptimizerInit::new(2).with_window(WindowMode::Growing))
            .unwrap();
        let t = quadratic_trajectory(opt.as_mut(), 10).unwrap();
        assert!(t[1].er.is_some());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trajectory_csv(&t, &p).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap().lines().count(), 12);
    }
}
