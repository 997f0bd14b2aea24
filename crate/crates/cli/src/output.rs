//! Report CSV, time-series CSV and legacy VTK structured-points snapshots.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use eife_core::quadrature::FullField;
use eife_core::{Problem, StudyReport, TensorD, TensorMesh};

pub const REPORT_HEADER: &str = "nt,resolution,err_l2,cr_l2,err_h1,cr_h1,sec_per_step,growth";

/// Six significant digits; scientific notation below 1e-3 in magnitude.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x != 0.0 && x.abs() < 1e-3 {
        return format!("{x:.5e}");
    }
    let exponent = if x == 0.0 { 0 } else { x.abs().log10().floor() as i32 };
    let decimals = (5 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

fn cell(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

pub fn report_csv(report: &StudyReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in &report.rows {
        let fields = [
            r.nt.to_string(),
            r.resolution.clone(),
            cell(r.err_l2),
            cell(r.cr_l2),
            cell(r.err_h1),
            cell(r.cr_h1),
            cell(r.sec_per_step),
            cell(r.growth),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_report_csv(report: &StudyReport, path: &Path) -> io::Result<()> {
    std::fs::write(path, report_csv(report))
}

/// Writes `series.csv` rows as the run is observed.
pub struct SeriesWriter {
    out: BufWriter<File>,
}

impl SeriesWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "step,t,sup_norm,energy")?;
        Ok(SeriesWriter { out })
    }

    pub fn row(&mut self, step: usize, t: f64, sup: f64, energy: Option<f64>) -> io::Result<()> {
        writeln!(
            self.out,
            "{step},{},{},{}",
            format_number(t),
            format_number(sup),
            energy.map(|e| format!("{e:.10e}")).unwrap_or_default()
        )
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// Legacy VTK structured points with a single scalar field `u` on every
/// mesh node, x fastest. Dirichlet meshes carry their boundary values and
/// periodic meshes repeat the first node at the far end of each axis.
pub fn snapshot_text(u: &TensorD, mesh: &TensorMesh, problem: &Problem, t: f64) -> String {
    let field = FullField::from_unknowns(u, mesh, |x| problem.boundary_value(t, x));
    let parts = mesh.partitions();
    let d = parts.len();
    let mut dims = [1usize; 3];
    let mut origin = [0.0; 3];
    let mut spacing = [1.0; 3];
    for (a, p) in parts.iter().enumerate() {
        dims[a] = p.n() + 1;
        origin[a] = p.a();
        spacing[a] = p.h();
    }
    let total = field.values.len();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str(&format!("u at t = {t}\n"));
    s.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    s.push_str(&format!("DIMENSIONS {} {} {}\n", dims[0], dims[1], dims[2]));
    s.push_str(&format!("ORIGIN {} {} {}\n", origin[0], origin[1], origin[2]));
    s.push_str(&format!("SPACING {} {} {}\n", spacing[0], spacing[1], spacing[2]));
    s.push_str(&format!(
        "POINT_DATA {total}\nSCALARS u double 1\nLOOKUP_TABLE default\n"
    ));
    // field values are row-major with the last axis fastest; VTK wants x fastest
    let strides = eife_core::tensor::strides(&field.shape);
    let mut idx = [0usize; 3];
    for _ in 0..total {
        let flat: usize = (0..d).map(|a| idx[a] * strides[a]).sum();
        s.push_str(&field.values[flat].to_string());
        s.push('\n');
        for a in 0..3 {
            idx[a] += 1;
            if idx[a] < dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    s
}

pub fn write_snapshot(u: &TensorD, mesh: &TensorMesh, problem: &Problem, t: f64, path: &Path) -> io::Result<()> {
    std::fs::write(path, snapshot_text(u, mesh, problem, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use eife_core::{builtin_linear_rd, BoundaryKind, StudyRow};
    use std::time::SystemTime;

    #[test]
    fn number_format() {
        assert_eq!(format_number(1.6716), "1.67160");
        assert_eq!(format_number(2.12010e-5), "2.12010e-5");
        assert_eq!(format_number(0.5), "0.500000");
        assert_eq!(format_number(1024.0), "1024.00");
        assert_eq!(format_number(0.0), "0.00000");
        assert_eq!(format_number(-0.004), "-0.00400000");
    }

    #[test]
    fn report_layout() {
        let mut rows = vec![StudyRow::new(1024, "8x4"), StudyRow::new(1024, "16x8")];
        rows[0].err_l2 = Some(2.12e-5);
        rows[1].err_l2 = Some(6.68e-6);
        rows[1].cr_l2 = Some(1.67);
        let report = StudyReport {
            scheme: "eife2".into(),
            problem: "linear_rd".into(),
            started: SystemTime::now(),
            finished: SystemTime::now(),
            rows,
        };
        let text = report_csv(&report);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "1024,8x4,2.12000e-5,,,,,");
        assert_eq!(lines[2], "1024,16x8,6.68000e-6,1.67000,,,,");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn snapshot_of_dirichlet_mesh_has_boundary_nodes() {
        let p = builtin_linear_rd();
        let mesh = TensorMesh::uniform(&p.domain, &[4, 4], BoundaryKind::HomogeneousDirichlet).unwrap();
        let u = TensorD::filled(&mesh.dof_shape(), 0.25);
        let text = snapshot_text(&u, &mesh, &p, 0.0);
        assert!(text.contains("DIMENSIONS 5 5 1\n"));
        assert!(text.contains("SPACING 0.5 0.25 1\n"));
        assert!(text.contains("ORIGIN 0.5 0 0\n"));
        let values: Vec<f64> = text.lines().skip(10).map(|l| l.parse().unwrap()).collect();
        assert_eq!(values.len(), 25);
        assert_eq!(values.iter().filter(|&&v| v == 0.25).count(), 9);
        // x fastest: the second value is node (1, 0), on the boundary y = 0
        assert_eq!(values[1], 0.0);
        assert_eq!(values[6], 0.25);
    }
}
